"""Mapping imaginary hoppings onto longitudinally modulated waveguide arrays.

Waveguides with rho_n = 1 carry a sinusoidal modulation of propagation
constant and gain/loss, beta(z) = A_beta cos(2 pi z / Lambda) and
gamma(z) = A_gamma cos(2 pi z / Lambda).  Averaging over one period turns a
real coupling Delta between a modulated and an unmodulated guide into the
effective hop i Gamma Delta, where i Gamma = J0(Lambda (A_beta - i A_gamma) / 2 pi).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoSolutionError, NumericalError, ParameterError, RealizationError
from .lattice import Lattice

TWO_PI = 2 * np.pi


def j0_complex(z, cutoff=1e-12, max_terms=200):
    """Bessel J0 of a complex argument by its ascending power series."""
    z = np.asarray(z, complex)
    x = -(z * z) / 4
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, max_terms):
        term = term * x / (k * k)
        total = total + term
        if np.all(np.abs(term) <= cutoff * np.maximum(np.abs(total), 1e-300)):
            break
    else:
        raise NumericalError("J0 series did not converge")
    return total if total.ndim else complex(total)


def effective_gamma(Lambda, A_beta, A_gamma):
    """Period average of exp(i phi) for the sinusoidal profiles: J0(Lambda (A_beta - i A_gamma) / 2 pi)."""
    if not Lambda > 0:
        raise ParameterError("Lambda must be positive")
    return complex(j0_complex(Lambda * (A_beta - 1j * A_gamma) / TWO_PI))


def modulation_phase(z, Lambda, A_beta, A_gamma):
    """phi(z) = int_0^z (beta - i gamma) for the sinusoidal profiles."""
    return (Lambda / TWO_PI) * (A_beta - 1j * A_gamma) * np.sin(TWO_PI * np.asarray(z) / Lambda)


def periodic_antiderivative(samples, Lambda):
    """Zero-mean antiderivative of periodic samples on a uniform one-period grid.

    Uses the FFT; the samples must have zero mean.
    """
    samples = np.asarray(samples, complex)
    m = len(samples)
    spec = np.fft.fft(samples)
    if abs(spec[0]) > 1e-9 * max(1.0, np.abs(spec).max()):
        raise ParameterError("modulation profile must have zero mean over one period")
    k = np.fft.fftfreq(m, d=Lambda / m) * TWO_PI
    out = np.zeros_like(spec)
    nz = k != 0
    out[nz] = spec[nz] / (1j * k[nz])
    phi = np.fft.ifft(out)
    return phi - phi[0]


def period_average(beta, gamma, Lambda, sign=1):
    """<exp(sign * i phi)> over one period from sampled beta(z), gamma(z).

    ``beta`` and ``gamma`` are samples at z_j = j Lambda / M, j = 0..M-1.  The
    periodic trapezoid rule is the plain mean.
    """
    beta = np.asarray(beta, float)
    gamma = np.asarray(gamma, float)
    if beta.shape != gamma.shape or beta.ndim != 1:
        raise ParameterError("beta and gamma must be equal-length 1-d samples")
    phi = periodic_antiderivative(beta - 1j * gamma, Lambda)
    return complex(np.mean(np.exp(sign * 1j * phi)))


def sinusoid_average(Lambda, A_beta, A_gamma, points=4096, sign=1):
    """Quadrature check of the J0 formula with sampled cosine profiles."""
    z = np.arange(points) * Lambda / points
    c = np.cos(TWO_PI * z / Lambda)
    return period_average(A_beta * c, A_gamma * c, Lambda, sign)


@dataclass(frozen=True)
class ModulationDesign:
    Lambda: float
    A_beta: float
    A_gamma: float
    Gamma: float
    rho: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    Delta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    offset: int = 0
    kappa_inf: float = 1.0

    @property
    def beta_product(self):
        return self.Lambda * self.A_beta / TWO_PI

    @property
    def gamma_product(self):
        return self.Lambda * self.A_gamma / TWO_PI

    def profiles(self, z):
        """beta(z), gamma(z) of a modulated guide."""
        c = np.cos(TWO_PI * np.asarray(z) / self.Lambda)
        return self.A_beta * c, self.A_gamma * c

    def to_dict(self):
        return {
            "Lambda": self.Lambda, "A_beta": self.A_beta, "A_gamma": self.A_gamma,
            "Gamma": self.Gamma, "offset": self.offset, "kappa_inf": self.kappa_inf,
            "rho": [int(v) for v in self.rho], "Delta": [float(v) for v in self.Delta],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["Lambda"]), float(d["A_beta"]), float(d["A_gamma"]),
                   float(d["Gamma"]), np.array(d.get("rho", []), int),
                   np.array(d.get("Delta", []), float), int(d.get("offset", 0)),
                   float(d.get("kappa_inf", 1.0)))


def solve_modulation(beta_product, Lambda=0.1, bracket=(0.0, 5.0), grid=501,
                     tol=1e-10) -> ModulationDesign:
    """Gain/loss amplitude making J0 purely imaginary at a fixed Lambda A_beta / 2 pi.

    Scans x = Lambda A_gamma / 2 pi over ``bracket`` for the first sign change
    of Re J0(beta_product - i x) and bisects it.
    """
    if not Lambda > 0:
        raise ParameterError("Lambda must be positive")
    b = float(beta_product)

    def f(x):
        return j0_complex(b - 1j * x).real

    xs = np.linspace(bracket[0], bracket[1], grid)
    vals = np.array([f(x) for x in xs])
    hit = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)
    if hit.size == 0:
        raise NoSolutionError(
            f"Re J0 keeps one sign for Lambda A_gamma / 2 pi in {bracket} at beta product {b}")
    lo, hi = xs[hit[0]], xs[hit[0] + 1]
    flo = vals[hit[0]]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo < 1e-15:
            lo = hi = mid
            break
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    val = j0_complex(b - 1j * x)
    if abs(val.real) > tol:
        raise NumericalError(f"bisection stalled with |Re J0| = {abs(val.real):.2e}")
    return ModulationDesign(Lambda, TWO_PI * b / Lambda, TWO_PI * x / Lambda, float(val.imag))


def realize_lattice(target: Lattice, design: ModulationDesign, tol=1e-10) -> ModulationDesign:
    """Assign modulation mask and bare couplings for a lattice.

    Real bonds join guides with equal masks, imaginary bonds join a modulated
    and an unmodulated guide.  The guides beyond the window are unmodulated,
    so the mask starts at 0 on the left and must return to 0 on the right.
    """
    hops = target.hops
    scale = max(1.0, float(np.abs(hops).max()))
    if np.any(np.abs(target.sites.imag) > tol * scale):
        raise RealizationError("site energies must be real")
    is_imag = np.abs(hops.real) <= tol * scale
    is_real = np.abs(hops.imag) <= tol * scale
    bad = ~(is_imag | is_real)
    if np.any(bad):
        raise RealizationError("bonds neither real nor imaginary: "
                               f"{target.bond_index[bad].tolist()}")
    if np.any(is_imag) and not abs(design.Gamma) > 0:
        raise RealizationError("design has Gamma = 0")
    # outside guide (offset - 1) is unmodulated; walk bonds left to right
    rho_left = 0
    rho = np.zeros(target.size, int)
    for i in range(target.size):
        rho_left = rho_left ^ int(is_imag[i])
        rho[i] = rho_left
    if rho[-1] ^ int(is_imag[-1]) != 0:
        flips = target.bond_index[is_imag].tolist()
        raise RealizationError(
            f"odd number of imaginary bonds {flips}: the mask cannot return to 0 on the right")
    delta = np.where(is_imag, hops.imag / design.Gamma if design.Gamma else 0.0, hops.real)
    return replace(design, rho=rho, Delta=delta.astype(float), offset=target.offset,
                   kappa_inf=target.kappa_inf)


def reconstruct_hops(design: ModulationDesign):
    """kappa_n = Delta_n for equal neighbouring masks, i Gamma Delta_n otherwise."""
    rho = np.concatenate([[0], design.rho, [0]])
    straddle = rho[:-1] != rho[1:]
    return np.where(straddle, 1j * design.Gamma * design.Delta, design.Delta + 0j)


@dataclass(frozen=True)
class AveragingReport:
    max_discrepancy: float
    relative_discrepancy: float
    z: np.ndarray
    full: np.ndarray
    averaged: np.ndarray


def verify_averaging(design: ModulationDesign, Delta=0.05, rho=(0, 1), z_max=20.0,
                     detuning=(0.0, 0.0), rtol=1e-10, atol=1e-12) -> AveragingReport:
    """Integrate a modulated waveguide pair and compare with the averaged model.

    Full model: i dc_n/dz = Delta c_m + [V_n + rho_n (beta(z) - i gamma(z))] c_n.
    Averaged model: i da/dz = K a with off-diagonal Delta or i Gamma Delta.
    Both start from (1, 0); they are compared at z = j Lambda, where the fast
    phase vanishes.
    """
    from scipy.integrate import solve_ivp
    from scipy.linalg import expm

    L = design.Lambda
    rho = np.asarray(rho, float)
    V = np.asarray(detuning, float)

    def rhs(z, c):
        b, g = design.profiles(z)
        diag = V + rho * (b - 1j * g)
        return -1j * np.array([Delta * c[1] + diag[0] * c[0], Delta * c[0] + diag[1] * c[1]])

    periods = int(round(z_max / L))
    zs = np.arange(periods + 1) * L
    sol = solve_ivp(rhs, (0.0, zs[-1]), np.array([1.0, 0.0], complex), method="DOP853",
                    t_eval=zs, rtol=rtol, atol=atol, max_step=L / 16)
    if sol.status != 0:
        raise NumericalError(f"coupled-mode integration failed: {sol.message}")
    kap = Delta if rho[0] == rho[1] else 1j * design.Gamma * Delta
    K = np.array([[V[0], kap], [kap, V[1]]], complex)
    a = np.array([expm(-1j * K * z) @ np.array([1.0, 0.0]) for z in zs])
    full = sol.y.T
    diff = np.abs(full - a).max()
    return AveragingReport(float(diff), float(diff / np.abs(a).max()), zs, full, a)
