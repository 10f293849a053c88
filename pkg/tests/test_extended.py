import mpmath
import numpy as np
import pytest

from darboux_lattice import Lattice, synthesize_family
from darboux_lattice.darboux import family_hops, family_levels
from darboux_lattice.extended import (family_hops_mp, scatter_family_dd, split_mp, to_complex,
                                      transfer_scatter_dd)
from darboux_lattice.scattering import default_q_grid, scatter_analytic, scatter_numeric

Q = default_q_grid()


def test_split_roundtrip():
    with mpmath.workdps(40):
        x = mpmath.mpf(1) / 3 + 1j * mpmath.sqrt(2)
        pair = split_mp([x])[0]
        back = mpmath.mpf(pair[0]) + mpmath.mpf(pair[1])
        assert abs(back - x.real) < mpmath.mpf(10) ** -30
        assert abs(to_complex(pair) - complex(x)) < 1e-16


def test_mp_hops_match_double():
    n = np.arange(-40, 45)
    for cfg in [("cosh", 3, 0.6, 0.0), ("sinh", 3, 0.01, 0.5), ("sinh", 2, 0.3, 0.25)]:
        hp = np.array([complex(h) for h in family_hops_mp(*cfg, n)])
        assert np.max(np.abs(hp - family_hops(*cfg, n))) < 1e-13


def test_dd_agrees_with_double_when_well_conditioned(fig1a):
    dd = scatter_family_dd("cosh", 3, 0.6, 0.0, q=Q, sites=fig1a.size)
    num = scatter_numeric(fig1a, Q)
    assert np.max(np.abs(dd.t - num.t)) < 1e-10


def test_dd_free_chain():
    lat = Lattice.uniform(50, offset=-20)
    r, t = transfer_scatter_dd(lat.offset, [1] * 51, [0] * 50, Q)
    assert np.max(np.abs(r)) < 1e-12 and np.max(np.abs(t - 1)) < 1e-12


def test_dd_site_energies():
    lat = Lattice.uniform(40, offset=-20)
    sites = lat.sites.copy()
    sites[18:22] = [0.3, -0.2 + 0.1j, 0.5, 0.1]
    defect = Lattice(lat.offset, lat.hops, sites)
    r, t = transfer_scatter_dd(defect.offset, list(defect.hops), list(sites), Q)
    num = scatter_numeric(defect, Q)
    assert np.max(np.abs(r - num.r)) < 1e-12 and np.max(np.abs(t - num.t)) < 1e-12


def test_fig1b_extended_unitarity():
    res = scatter_family_dd("sinh", 3, 0.01, 0.5, q=Q)
    assert np.max(res.unitarity_defect) < 1e-8
    assert np.max(np.abs(res.r)) < 1e-8
    ana = scatter_analytic(family_levels("sinh", 3, 0.01, 0.5), Q)
    assert np.max(np.abs(res.t - ana.t)) < 1e-6


def test_fig1b_double_precision_breaks_down(fig1b):
    # same lattice in plain doubles: edge samples are ruined by hop rounding
    res = scatter_numeric(fig1b, Q)
    assert np.abs(res.r[0]) > 1e-2
