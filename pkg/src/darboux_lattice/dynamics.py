"""Wave-packet propagation on a lattice with fixed-step RK4."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (BoundaryContaminationWarning, DimensionError, InvalidProbeError,
                     LatticeError, ParameterError)
from .lattice import Lattice, apply_hamiltonian, defect_window

CORE_TOL = 1e-2  # hopping deviation that marks the scattering core for probe checks
EDGE_FRACTION = 0.05  # outer share of the window watched for boundary hits
EDGE_PROB = 1e-6


@dataclass(frozen=True)
class WavepacketSpec:
    """Gaussian packet exp[-(n + n0)^2 / w^2] exp(-i q0 n)."""

    n0: float = 70.0
    w: float = 10.0
    q0: float = np.pi / 2
    normalize: bool = True

    def __post_init__(self):
        if not self.w > 0:
            raise ParameterError("packet width must be positive")
        if not 0 < self.q0 < np.pi:
            raise ParameterError("q0 must lie in (0, pi)")


def initial_state(lat: Lattice, packet: WavepacketSpec):
    n = lat.site_index
    psi = np.exp(-((n + packet.n0) / packet.w) ** 2) * np.exp(-1j * packet.q0 * n)
    if packet.normalize:
        norm = np.sqrt(np.sum(np.abs(psi) ** 2))
        if norm == 0:
            raise ParameterError("packet has no weight inside the window")
        psi = psi / norm
    return psi


@dataclass(eq=False)
class EvolutionTrace:
    times: np.ndarray
    P_total: np.ndarray
    centroid: np.ndarray
    sites: np.ndarray
    profiles: dict
    final_state: np.ndarray
    packet: WavepacketSpec
    kappa: float
    core: range
    contamination_time: float | None = None
    P: np.ndarray | None = field(default=None)

    def sample_index(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise InvalidProbeError(f"t = {t} was not sampled")
        return i

    def profile(self, t):
        """P_n at a probe time."""
        for key, val in self.profiles.items():
            if abs(key - t) <= 1e-9 * max(1.0, abs(t)):
                return val
        raise InvalidProbeError(f"no profile stored at t = {t}; pass it in probe_times")


def rk4_step(lat: Lattice, psi, dt):
    """One classical Runge-Kutta step of i dpsi/dt = H psi."""
    def f(y):
        return -1j * apply_hamiltonian(lat, y)
    k1 = f(psi)
    k2 = f(psi + 0.5 * dt * k1)
    k3 = f(psi + 0.5 * dt * k2)
    k4 = f(psi + dt * k3)
    return psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _core(lat):
    try:
        return defect_window(lat, CORE_TOL)
    except LatticeError:
        return range(lat.offset, lat.last + 1)


def evolve(lat: Lattice, packet: WavepacketSpec, t_max: float, dt: float = 0.005,
           sample_every: float = 1.0, probe_times=(), keep_profiles=False,
           psi0=None) -> EvolutionTrace:
    """Integrate i dpsi/dt = H psi from t = 0 to t_max.

    Totals and centroids are sampled every ``sample_every``; full P_n
    profiles only at ``probe_times`` (and at every sample if
    ``keep_profiles``).  A BoundaryContaminationWarning is issued the first
    time more than 1e-6 of the probability sits in the outer 5% of the window.
    """
    kap = lat.kappa_inf
    if not dt > 0 or dt > 0.01 / kap * (1 + 1e-12):
        raise ParameterError("dt must be positive and at most 0.01 / kappa")
    if not t_max > 0:
        raise ParameterError("t_max must be positive")
    steps = int(round(t_max / dt))
    if abs(steps * dt - t_max) > 1e-9 * t_max:
        raise ParameterError("t_max must be a multiple of dt")
    every = int(round(sample_every / dt))
    if every < 1 or abs(every * dt - sample_every) > 1e-9 * sample_every:
        raise ParameterError("sample_every must be a multiple of dt")
    probe_steps = {}
    for tp in probe_times:
        k = int(round(tp / dt))
        if k < 0 or k > steps or abs(k * dt - tp) > 1e-9 * max(1.0, tp):
            raise ParameterError(f"probe time {tp} must be a multiple of dt inside [0, t_max]")
        probe_steps[k] = float(tp)

    psi = initial_state(lat, packet) if psi0 is None else np.array(psi0, complex)
    if psi.shape != (lat.size,):
        raise DimensionError("initial state does not match the lattice")
    n = lat.site_index.astype(float)
    edge = max(1, int(EDGE_FRACTION * lat.size))
    times, totals, cents, mats = [], [], [], []
    profiles = {}
    contamination = None

    def record(k, psi):
        nonlocal contamination
        p = np.abs(psi) ** 2
        tot = p.sum()
        if k % every == 0:
            times.append(k * dt)
            totals.append(tot)
            cents.append(float(np.dot(n, p) / tot))
            if keep_profiles:
                mats.append(p)
        if k in probe_steps:
            profiles[probe_steps[k]] = p
        if contamination is None and (p[:edge].sum() + p[-edge:].sum()) > EDGE_PROB * tot:
            contamination = k * dt
            if k > 0:
                warnings.warn(f"packet reached the window boundary at t = {k * dt:g}",
                              BoundaryContaminationWarning, stacklevel=3)

    record(0, psi)
    for k in range(1, steps + 1):
        psi = rk4_step(lat, psi, dt)
        # boundary checks only need the sampled grid plus probes
        if k % every == 0 or k in probe_steps:
            record(k, psi)
    if not np.all(np.isfinite(psi)):
        from .errors import NumericalError
        raise NumericalError("state became non-finite during integration")
    return EvolutionTrace(np.array(times), np.array(totals), np.array(cents),
                          lat.site_index.copy(), profiles, psi, packet, kap, _core(lat),
                          contamination, np.array(mats) if keep_profiles else None)


def _check_probe(trace: EvolutionTrace, t_probe, p):
    core = trace.core
    if len(core) == 0:
        return
    i0 = core.start - trace.sites[0]
    i1 = core.stop - trace.sites[0]
    inside = p[max(i0, 0):max(i1, 0)].sum() / p.sum()
    if inside > 1e-3:
        raise InvalidProbeError(
            f"{inside:.2e} of the probability is still inside the defect core at t = {t_probe}")


def time_of_flight(trace_defect: EvolutionTrace, trace_free: EvolutionTrace, t_probe) -> float:
    """Arrival-time advance: centroid difference divided by the group velocity."""
    if trace_defect.packet.q0 != trace_free.packet.q0:
        raise ParameterError("traces use different carriers")
    i = trace_defect.sample_index(t_probe)
    j = trace_free.sample_index(t_probe)
    if trace_defect is not trace_free:
        _check_probe(trace_defect, t_probe, trace_defect.profile(t_probe))
    vg = 2 * trace_free.kappa * np.sin(trace_free.packet.q0)
    return float((trace_defect.centroid[i] - trace_free.centroid[j]) / vg)


def distortion(trace_defect: EvolutionTrace, trace_free: EvolutionTrace, t_probe) -> float:
    """L2 distance between the sum-normalised P_n profiles at t_probe."""
    if not np.array_equal(trace_defect.sites, trace_free.sites):
        raise DimensionError("traces must share the site window")
    pd = trace_defect.profile(t_probe)
    pf = trace_free.profile(t_probe)
    if trace_defect is not trace_free:
        _check_probe(trace_defect, t_probe, pd)
    return float(np.sqrt(np.sum((pd / pd.sum() - pf / pf.sum()) ** 2)))


def centroid_velocity(trace: EvolutionTrace, t0, t1):
    """Least-squares slope of the centroid over [t0, t1]."""
    sel = (trace.times >= t0 - 1e-12) & (trace.times <= t1 + 1e-12)
    if sel.sum() < 2:
        raise InvalidProbeError("fewer than two samples in the fit interval")
    return float(np.polyfit(trace.times[sel], trace.centroid[sel], 1)[0])


def free_propagator(n, t, kappa=1.0):
    """Amplitude at site n after time t on the uniform chain, starting on site 0.

    Equals (-i)^n J_n(2 kappa t).
    """
    from scipy.special import jv
    n = np.asarray(n)
    return (-1j) ** np.abs(n) * jv(np.abs(n), 2 * kappa * t)
