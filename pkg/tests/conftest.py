import numpy as np
import pytest

from darboux_lattice import Lattice, synthesize_family
from darboux_lattice.dynamics import WavepacketSpec, evolve

FIG1A = ("cosh", 3, 0.6, 0.0)
FIG1B = ("sinh", 3, 0.01, 0.5)


@pytest.fixture(scope="session")
def fig1a():
    return synthesize_family(*FIG1A)


@pytest.fixture(scope="session")
def fig1b():
    return synthesize_family(*FIG1B)


@pytest.fixture(scope="session")
def packet():
    return WavepacketSpec(n0=70, w=10, q0=np.pi / 2)


def _pair(lat, packet):
    free = Lattice.uniform(lat.size, lat.kappa_inf, lat.offset)
    td = evolve(lat, packet, 100.0, 0.005, probe_times=(70.0,))
    tf = evolve(free, packet, 100.0, 0.005, probe_times=(70.0,))
    return td, tf


@pytest.fixture(scope="session")
def fig3_runs(fig1a, packet):
    return _pair(fig1a, packet)


@pytest.fixture(scope="session")
def fig5_runs(fig1b, packet):
    return _pair(fig1b, packet)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
