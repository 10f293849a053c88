"""Reflection and transmission of plane waves, numeric and closed form.

Convention: a wave e^{-iqn} comes in from n -> -inf, so far to the left
psi_n = e^{-iqn} + r e^{iqn} and far to the right psi_n = t e^{-iqn}, with
energy E = 2 kappa cos q.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .lattice import Lattice, defect_window

EDGE_EPS = 1e-3
SINGULAR_TOL = 1e-12


class Method(str, enum.Enum):
    TRANSFER = "TransferMatrix"
    ANALYTIC = "AnalyticProduct"


def default_q_grid(samples=512, eps=EDGE_EPS):
    """Uniform wave numbers on (eps, pi - eps), endpoints included."""
    if samples < 2:
        raise ParameterError("need at least two q samples")
    return np.linspace(eps, np.pi - eps, samples)


def _check_grid(q, eps=EDGE_EPS):
    q = np.atleast_1d(np.asarray(q, float))
    if q.ndim != 1 or q.size == 0:
        raise ParameterError("q grid must be a non-empty 1-d sequence")
    if np.any(q < eps - 1e-15) or np.any(q > np.pi - eps + 1e-15):
        raise ParameterError(f"q values must lie in [{eps}, pi - {eps}]")
    return q


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    q: np.ndarray
    r: np.ndarray
    t: np.ndarray
    phase: np.ndarray
    method: Method
    flagged: np.ndarray

    @property
    def unitarity_defect(self):
        """| |t|^2 + |r|^2 - 1 | at each q."""
        return np.abs(np.abs(self.t) ** 2 + np.abs(self.r) ** 2 - 1)


def scatter_numeric(lat: Lattice, q=None, homogeneity_tol=1e-8) -> ScatteringResult:
    """Transfer-recurrence scattering, vectorised over q.

    Starts with psi_n = e^{-iqn} on the two right-most sites (last stored
    site and its uniform neighbour), runs the difference equation leftward
    and decomposes the solution on the first stored site and its left
    neighbour.  Samples with |A| < 1e-12 are flagged and returned as NaN.
    """
    q = default_q_grid() if q is None else _check_grid(q)
    defect_window(lat, homogeneity_tol)  # raises if there is no asymptotic region
    kap = lat.kappa_inf
    E = 2 * kap * np.cos(q)
    hops, sites = lat.hops, lat.sites
    m = lat.size
    right = lat.last
    psi_next = np.exp(-1j * q * (right + 1))
    psi = np.exp(-1j * q * right)
    for i in range(m - 1, -1, -1):
        prev = ((E - sites[i]) * psi - hops[i + 1] * psi_next) / hops[i]
        psi_next, psi = psi, prev
    # psi is now at site offset-1, psi_next at offset
    n0 = lat.offset - 1
    eq = np.exp(1j * q)
    denom = eq - 1 / eq
    A = (psi * eq - psi_next) * np.exp(1j * q * n0) / denom
    B = (psi_next - psi / eq) * np.exp(-1j * q * n0) / denom
    flagged = np.abs(A) < SINGULAR_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(flagged, np.nan, 1 / A)
        r = np.where(flagged, np.nan, B / A)
    phase = unwrap_phase(np.angle(t))
    return ScatteringResult(q, r, t, phase, Method.TRANSFER, flagged)


def unwrap_phase(angles):
    """Continuous phase from principal angles (NaN samples are skipped)."""
    angles = np.asarray(angles, float)
    out = np.full_like(angles, np.nan)
    ok = np.isfinite(angles)
    if ok.any():
        out[ok] = np.unwrap(angles[ok])
    return out


def _level_arrays(levels):
    om = np.array([lv.omega for lv in levels], float)
    de = np.array([lv.delta for lv in levels], float)
    return om, de


def level_factors(levels, q):
    """Per-level transmission and reflection factors, shape (levels, q)."""
    q = np.atleast_1d(np.asarray(q, float))
    om, de = _level_arrays(levels)
    om, de = om[:, None], de[:, None]
    eq = np.exp(1j * q)[None, :]
    den = np.exp(om / 2) - de * np.exp(-om / 2) * eq
    tk = (np.exp(-om / 2) - de * np.exp(om / 2) * eq) / den
    rk = (np.exp(om / 2) - de * np.exp(-om / 2) / eq) / den
    return tk, rk


def scatter_analytic(levels, q=None, t1=1.0, r1=0.0) -> ScatteringResult:
    """Closed-form r and t after adding ``levels`` to a lattice with (t1, r1).

    The default base is the defect-free chain (t1 = 1, r1 = 0).
    """
    q = default_q_grid() if q is None else _check_grid(q)
    levels = list(levels)
    tk, rk = level_factors(levels, q)
    t = np.asarray(t1, complex) * np.prod(tk, axis=0)
    r = np.asarray(r1, complex) * np.prod(rk, axis=0) * np.ones_like(q)
    if levels and np.allclose(t1, 1.0) and np.allclose(r1, 0.0):
        phase = transmission_phase(levels, q)
    else:
        phase = unwrap_phase(np.angle(t))
    return ScatteringResult(q, r, t * np.ones_like(q), phase, Method.ANALYTIC,
                            np.zeros(q.shape, bool))


def level_phase(omega, delta, q):
    """Continuous phase of one level's transmission factor.

    Written as q + pi [delta = 1] + arg(1 - delta e^{-omega - iq})
    - arg(e^{omega/2} - delta e^{-omega/2 + iq}); both arguments stay in the
    right half plane, so no unwrapping is needed.  Equals pi (delta = 1) or 0
    (delta = -1) at q = 0.
    """
    q = np.asarray(q, float)
    a = np.angle(1 - delta * np.exp(-omega - 1j * q))
    b = np.angle(np.exp(omega / 2) - delta * np.exp(-omega / 2 + 1j * q))
    return q + (np.pi if delta > 0 else 0.0) + a - b


def level_phase_slope(omega, delta, q):
    """d/dq of ``level_phase``."""
    q = np.asarray(q, float)
    c = delta * np.exp(-omega - 1j * q)
    b = delta * np.exp(-omega / 2 + 1j * q)
    return 1 + np.real(c / (1 - c)) + np.real(b / (np.exp(omega / 2) - b))


def transmission_phase(levels, q):
    """Sum of the continuous per-level phases."""
    q = np.asarray(q, float)
    out = np.zeros(q.shape)
    for lv in levels:
        out = out + level_phase(lv.omega, lv.delta, q)
    return out


@dataclass(frozen=True)
class DelayReport:
    q0: float
    vg: float
    dphi_dq: float
    tau_g: float


def group_delay(levels, q0, kappa=None) -> DelayReport:
    """Phase slope at the carrier and the resulting time-of-flight advance.

    tau_g = (d phi / dq) / (2 kappa sin q0); positive values mean the
    packet arrives early.  ``kappa`` defaults to the levels' own value.
    """
    q0 = float(q0)
    if not EDGE_EPS <= q0 <= np.pi - EDGE_EPS:
        raise ParameterError("q0 must lie inside the band, away from the edges")
    levels = list(levels)
    if kappa is None:
        kappa = levels[0].kappa if levels else 1.0
    slope = float(sum(level_phase_slope(lv.omega, lv.delta, q0) for lv in levels))
    vg = 2 * kappa * np.sin(q0)
    return DelayReport(q0, float(vg), slope, slope / vg)
