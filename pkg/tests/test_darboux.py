import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darboux_lattice import Lattice, apply_hamiltonian, spectrum
from darboux_lattice.darboux import (LevelSpec, SeedKind, add_level_pair, build_seed,
                                     darboux_step, difference_residual, factorize,
                                     family_hops, family_levels, iterate_vs_closed_form,
                                     partner_bound_state, psqrt, synthesize_family)
from darboux_lattice.errors import LatticeError, ParameterError, SeedError

FREE = Lattice.uniform(120, offset=-60)


def seed_for(kind, omega, alpha, delta=1, lat=FREE):
    return build_seed(LevelSpec.from_omega(omega, delta, kind, alpha), lat)


def test_psqrt_cut():
    assert psqrt(-4 + 0j) == 2j
    assert psqrt(complex(-4, -1e-17)) == 2j
    assert psqrt(complex(-4, 1e-17)) == 2j
    assert psqrt(9.0) == 3


# --- levels and seeds ------------------------------------------------------

def test_level_validation():
    with pytest.raises(ParameterError):
        LevelSpec.from_energy(1.5)
    with pytest.raises(ParameterError):
        LevelSpec(3.0, 0.2, 1)
    with pytest.raises(ParameterError):
        LevelSpec.from_omega(0.3, 1, SeedKind.SINH, alpha=2.0)
    lv = LevelSpec.from_energy(-2 * np.cosh(0.4))
    assert lv.delta == -1 and abs(lv.omega - 0.4) < 1e-12
    assert LevelSpec.from_dict(lv.to_dict()) == lv


def test_seed_examples():
    s = seed_for("cosh", 0.6, 0.0)
    assert abs(s.values(0) - 1) < 1e-15
    s = seed_for("sinh", 0.01, 0.5)
    assert abs(s.values(0) - np.sinh(-0.005)) < 1e-17
    assert abs(s.values(0) + 0.005000004) < 2e-8


@pytest.mark.parametrize("kind,alpha", [("cosh", 0.0), ("cosh", 0.3), ("sinh", 0.5)])
@pytest.mark.parametrize("delta", [1, -1])
def test_seed_solves_difference_equation(kind, alpha, delta):
    s = seed_for(kind, 0.6, alpha, delta)
    res = difference_residual(FREE, s.level.mu, s.offset, s.logphi)
    assert res.max() < 1e-12


@pytest.mark.parametrize("kind,alpha", [("cosh", 0.0), ("sinh", 0.5)])
def test_seed_diverges_both_ways(kind, alpha):
    phi = np.abs(seed_for(kind, 0.3, alpha).phi)
    mid = int(np.argmin(phi))
    assert np.all(np.diff(phi[mid + 1:]) > 0) and np.all(np.diff(phi[:mid]) < 0)
    assert np.all(phi > 0)


def test_sinh_seed_needs_fractional_alpha():
    with pytest.raises(ParameterError):
        seed_for("sinh", 0.6, 1.0)


def test_explicit_seed_superposition_accepted():
    lv = LevelSpec.from_omega(0.5, 1, SeedKind.EXPLICIT)
    n = FREE.site_index
    vals = 2 * np.cosh(0.5 * n) + 0.7 * np.sinh(0.5 * (n - 0.2)) + 5
    with pytest.raises(SeedError):
        build_seed(lv, FREE, values=vals)
    vals = 2 * np.cosh(0.5 * n) + 0.7 * np.sinh(0.5 * (n - 0.2))
    s = build_seed(lv, FREE, values=vals[50:70], values_offset=n[50])
    full = 2 * np.cosh(0.5 * s.index) + 0.7 * np.sinh(0.5 * (s.index - 0.2))
    assert np.max(np.abs(s.phi / full - 1)) < 1e-9


def test_closed_form_seed_needs_free_lattice(fig1a):
    with pytest.raises(LatticeError):
        build_seed(LevelSpec.from_omega(0.6), fig1a)


# --- factorization -----------------------------------------------------------

CASES = [("cosh", w, 0.0) for w in (0.01, 0.6, 2.0)] + [("sinh", w, 0.5) for w in (0.01, 0.6, 2.0)]


@pytest.mark.parametrize("kind,omega,alpha", CASES)
def test_factorization_identities(kind, omega, alpha, rng):
    lat = FREE
    seed = seed_for(kind, omega, alpha)
    ops = factorize(lat, seed)
    assert np.array_equal(ops.q, -ops.r)
    assert np.array_equal(ops.q_bar, -ops.r_bar[1:])
    bonds = ops.first + np.arange(len(ops.r))
    assert np.max(np.abs(ops.r * ops.r_bar + lat.hop(bonds))) < 1e-14
    partner = darboux_step(lat, seed)
    big = partner.crop(lat.offset, lat.last + 1)
    for _ in range(20):
        psi = rng.normal(size=lat.size) + 1j * rng.normal(size=lat.size)
        qr = ops.apply_Q(ops.apply_R(psi, lat.offset), lat.offset) + ops.mu * psi
        assert np.max(np.abs(qr - apply_hamiltonian(lat, psi))) < 1e-12
        left = apply_hamiltonian(big, ops.apply_R(psi, lat.offset))
        right = ops.apply_R(apply_hamiltonian(lat, psi), lat.offset)
        assert np.max(np.abs(left - right)[1:-1]) < 1e-12


def test_r_limits():
    big = Lattice.uniform(200, offset=-100)
    ops = factorize(big, seed_for("cosh", 0.6, 0.0, lat=big))
    assert abs(ops.r[-1] + np.exp(-0.3)) < 1e-12
    assert abs(ops.r[0] + np.exp(0.3)) < 1e-12


def test_r_imaginary_where_seed_changes_sign():
    seed = seed_for("sinh", 0.01, 0.5)
    ops = factorize(FREE, seed)
    bonds = ops.first + np.arange(len(ops.r))
    ratio = (seed.values(bonds - 1) / seed.values(bonds)).real
    imag = np.abs(ops.r.real) == 0
    assert np.array_equal(imag, ratio < 0)
    assert np.array_equal(bonds[imag], [1])


def test_zero_seed_is_singular():
    lv = LevelSpec.from_omega(0.4, 1, SeedKind.EXPLICIT)
    n = FREE.site_index
    with pytest.raises(SeedError):
        build_seed(lv, FREE, values=np.sinh(0.4 * n))


# --- single steps ------------------------------------------------------------

def test_cosh_step_matches_closed_form():
    w, a = 0.6, 0.0
    lat = darboux_step(FREE, seed_for("cosh", w, a))
    n = lat.bond_index
    c = lambda m: np.cosh(w * (m - a))
    k = np.sqrt(c(n - 2) * c(n)) / c(n - 1)
    m = lat.site_index
    v = c(m + 1) / c(m) - c(m) / c(m - 1)
    assert np.max(np.abs(lat.hops - k)) < 1e-12
    assert np.max(np.abs(lat.sites - v)) < 1e-12


def test_cosh_step_bound_state():
    w = 0.6
    seed = seed_for("cosh", w, 0.0)
    lat = darboux_step(FREE, seed)
    bs = partner_bound_state(FREE, seed)
    resid = apply_hamiltonian(lat, bs.amplitudes) - bs.energy * bs.amplitudes
    assert np.max(np.abs(resid[1:-1])) < 1e-10
    n = lat.site_index
    closed = 1 / np.sqrt(np.cosh(w * n) * np.cosh(w * (n - 1)))
    closed /= np.linalg.norm(closed)
    assert np.max(np.abs(np.abs(bs.amplitudes) - closed)) < 1e-12
    assert abs(bs.amplitudes[0]) < 1e-12 and abs(bs.amplitudes[-1]) < 1e-12


def test_sinh_step():
    w, a = 0.6, 0.5
    seed = seed_for("sinh", w, a)
    lat = darboux_step(FREE, seed)
    n = lat.bond_index
    s = lambda m: np.sinh(w * (m - a))
    assert np.max(np.abs(lat.hops ** 2 - s(n - 2) * s(n) / s(n - 1) ** 2)) < 1e-12
    imag = np.abs(lat.hops.real) < 1e-14
    assert np.array_equal(n[imag], [1, 2])
    m = lat.site_index
    assert np.max(np.abs(lat.sites - (s(m + 1) / s(m) - s(m) / s(m - 1)))) < 1e-12
    bs = partner_bound_state(FREE, seed)
    resid = apply_hamiltonian(lat, bs.amplitudes) - bs.energy * bs.amplitudes
    assert np.max(np.abs(resid[1:-1])) < 1e-10


# --- pairs and families -------------------------------------------------------

def test_cosh_pair():
    lat = add_level_pair(FREE, seed_for("cosh", 0.6, 0.0))
    n = lat.bond_index
    c = lambda m: np.cosh(0.6 * m)
    k = np.sqrt(c(n) * c(n - 3) / (c(n - 1) * c(n - 2)))
    assert np.max(np.abs(lat.hops - k)) < 1e-10
    assert np.max(np.abs(lat.sites)) < 1e-10
    rep = spectrum(lat)
    assert np.allclose(np.sort(rep.bound_levels.real), [-2 * np.cosh(0.6), 2 * np.cosh(0.6)], atol=1e-10)


def test_sinh_pair():
    w, a = 0.6, 0.5
    lat = add_level_pair(FREE, seed_for("sinh", w, a))
    n = lat.bond_index
    s = lambda m: np.sinh(w * (m - a))
    assert np.max(np.abs(lat.hops ** 2 - s(n) * s(n - 3) / (s(n - 1) * s(n - 2)))) < 1e-10
    assert np.max(np.abs(lat.hops - family_hops("sinh", 1, w, a, n))) < 1e-10
    assert np.max(np.abs(lat.sites)) < 1e-10
    imag = np.abs(lat.hops.real) < 1e-12
    assert np.array_equal(n[imag], [1, 3])
    rep = spectrum(lat)
    assert rep.n_bound == 2 and rep.max_imag < 1e-8


def test_pair_needs_zero_site_energies():
    bumped = Lattice(FREE.offset, FREE.hops, np.where(FREE.site_index == 0, 0.1, 0.0))
    with pytest.raises(LatticeError):
        add_level_pair(bumped, seed_for("cosh", 0.6, 0.0))


@pytest.mark.parametrize("kind,N,w,a", [("cosh", 1, 0.6, 0.0), ("sinh", 2, 0.3, 0.25),
                                        ("cosh", 3, 0.6, 0.0), ("sinh", 3, 0.6, 0.5),
                                        ("cosh", 2, 1.0, -1.7), ("sinh", 1, 2.0, 2.7)])
def test_iteration_reproduces_closed_form(kind, N, w, a):
    rep = iterate_vs_closed_form(kind, N, w, a)
    assert rep.max_hop_residual < 1e-10
    assert rep.max_site_energy < 1e-10


def test_iteration_precision_at_small_omega():
    # round-off of the transported seeds grows as omega -> 0; still well bounded
    rep = iterate_vs_closed_form("sinh", 3, 0.01, 0.5)
    assert rep.max_hop_residual < 1e-6 and rep.gauge_flips % 2 == 0


@pytest.mark.parametrize("kind,a", [("cosh", 0.0), ("sinh", 0.5)])
def test_iteration_extended_precision(kind, a):
    rep = iterate_vs_closed_form(kind, 3, 0.01, a, dps=40)
    assert rep.max_hop_residual < 1e-13
    assert rep.max_site_energy < 1e-30
    assert rep.gauge_flips == 0


def test_extended_matches_double_route():
    a = iterate_vs_closed_form("sinh", 2, 0.6, 0.5).iterated
    b = iterate_vs_closed_form("sinh", 2, 0.6, 0.5, dps=30).iterated
    assert np.max(np.abs(a.hops - b.hops)) < 1e-12


def test_hermitian_family_real_positive(fig1a):
    assert np.all(np.abs(fig1a.hops.imag) == 0) and np.all(fig1a.hops.real > 0)
    assert np.all(fig1a.sites == 0)


@pytest.mark.parametrize("N,a", [(1, 0.5), (3, 0.5), (2, 0.25), (3, -1.3)])
def test_sinh_family_imaginary_pattern(N, a):
    lat = synthesize_family("sinh", N, 0.3, a)
    n = lat.bond_index
    imag = np.abs(lat.hops.real) == 0
    want = ((n > a) & (n < a + N)) | ((n > a + N + 1) & (n < a + 2 * N + 1))
    assert np.array_equal(imag, want)
    assert np.all(lat.hops[~imag].imag == 0)


def test_small_omega_limits():
    n = np.arange(-20, 30)
    k = family_hops("cosh", 3, 1e-6, 0.0, n)
    assert np.max(np.abs(k - 1)) < 1e-9
    k = family_hops("sinh", 3, 1e-6, 0.5, np.array([1]))[0]
    limit = np.sqrt(0.5 * 6.5 / (2.5 * 3.5))
    assert abs(abs(k) - limit) < 1e-9 and abs(k.real) == 0
    assert abs(abs(family_hops("sinh", 3, 0.01, 0.5, np.array([1]))[0]) - limit) < 1e-3


def test_principal_branch_option():
    n = np.arange(-10, 20)
    a = family_hops("sinh", 3, 0.3, 0.5, n, branch="principal")
    b = family_hops("sinh", 3, 0.3, 0.5, n)
    assert np.allclose(a ** 2, b ** 2, atol=1e-12)
    assert np.all(a.imag >= 0) and np.all(a.real >= 0)


@pytest.mark.parametrize("kind,N,w,a", [("cosh", 3, 0.6, 0.0), ("sinh", 3, 0.01, 0.5),
                                        ("cosh", 2, 0.05, 0.0)])
def test_asymptotic_homogeneity(kind, N, w, a):
    lat = synthesize_family(kind, N, w, a)
    edge = int(np.ceil(0.1 * lat.size))
    outer = np.concatenate([lat.hops[:edge], lat.hops[-edge:]])
    assert np.max(np.abs(outer - 1)) < 1e-10
    assert lat.size >= 400


def test_family_errors():
    with pytest.raises(ParameterError):
        synthesize_family("sinh", 3, 0.3, 1.0)
    with pytest.raises(ParameterError):
        synthesize_family("cosh", 0, 0.3, 0.0)
    with pytest.raises(ParameterError):
        synthesize_family("cosh", 2, -0.3, 0.0)


@pytest.mark.parametrize("kind,a", [("cosh", 0.0), ("sinh", 0.5)])
def test_bound_count_grows_by_two(kind, a):
    for N in (1, 2, 3):
        rep = spectrum(synthesize_family(kind, N, 0.6, a, sites=300))
        assert rep.n_bound == 2 * N
        want = np.sort([lv.mu for lv in family_levels(kind, N, 0.6, a)])
        assert np.allclose(np.sort(rep.bound_levels.real), want, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(w=st.floats(0.05, 2.0), a=st.floats(-3, 3), kind=st.sampled_from(["cosh", "sinh"]))
def test_single_pair_keeps_site_energies_zero(w, a, kind):
    if kind == "sinh" and abs(a - round(a)) < 0.05:
        a += 0.3
    lat = add_level_pair(FREE, seed_for(kind, w, a))
    core = slice(10, -10)
    assert np.max(np.abs(lat.sites[core])) < 1e-9
    n = lat.bond_index[core]
    assert np.allclose(lat.hops[core] ** 2, family_hops(kind, 1, w, a, n) ** 2, atol=1e-9)
