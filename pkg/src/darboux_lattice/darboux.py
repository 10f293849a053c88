"""Intertwining-operator factorization and level-adding Darboux steps.

Seeds are stored as complex logarithms so that cosh/sinh profiles on wide
windows never overflow; every ratio phi_{n-1}/phi_n is formed as the
exponential of a log difference.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import LatticeError, ParameterError, SeedError
from .lattice import Lattice

SEED_PAD = 4  # extra seed sites kept on each side of the lattice window
EXPLICIT_TOL = 1e-8  # relative difference-equation residual for user seeds


class SeedKind(str, enum.Enum):
    COSH = "cosh"
    SINH = "sinh"
    EXPLICIT = "explicit"


def psqrt(z, snap=1e-12):
    """Principal square root with a deterministic cut.

    Values whose imaginary part is below ``snap`` relative to |z| are treated
    as real, so sqrt(-x) = +i sqrt(x) regardless of the sign of a round-off
    imaginary part.
    """
    z = np.asarray(z, complex)
    re = z.real
    tiny = np.abs(z.imag) <= snap * np.abs(z)
    out = np.sqrt(z)
    root = np.sqrt(np.abs(re))
    out = np.where(tiny & (re < 0), 1j * root, out)
    out = np.where(tiny & (re >= 0), root + 0j, out)
    return out


def log_cosh(x):
    """Complex log of cosh(x) for real x (always real valued)."""
    ax = np.abs(np.asarray(x, float))
    return (ax + np.log1p(np.exp(-2 * ax)) - np.log(2.0)).astype(complex)


def log_sinh(x):
    """Complex log of sinh(x) for real x; imaginary part pi where x < 0."""
    x = np.asarray(x, float)
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        mag = ax + np.log(-np.expm1(-2 * ax)) - np.log(2.0)
    return mag + 1j * np.pi * (x < 0)


def _is_integer(a, tol=1e-12):
    return abs(a - round(a)) <= tol


# ---------------------------------------------------------------------------
# levels and seeds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSpec:
    """Target bound-state energy mu = 2 kappa delta cosh(omega)."""

    mu: float
    omega: float
    delta: int
    seed_kind: SeedKind = SeedKind.COSH
    alpha: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "seed_kind", SeedKind(self.seed_kind))
        if not self.kappa > 0:
            raise ParameterError("kappa must be positive")
        if not self.omega > 0:
            raise ParameterError("omega must be positive")
        if self.delta not in (1, -1):
            raise ParameterError("delta must be +1 or -1")
        if not abs(self.mu) > 2 * self.kappa:
            raise ParameterError(f"|mu| = {abs(self.mu)} must exceed the band edge {2 * self.kappa}")
        if np.sign(self.mu) != self.delta:
            raise ParameterError("delta must equal the sign of mu")
        if abs(2 * self.kappa * np.cosh(self.omega) - abs(self.mu)) > 1e-12 * abs(self.mu):
            raise ParameterError("mu and omega are inconsistent: 2 kappa cosh(omega) != |mu|")
        if self.seed_kind is SeedKind.SINH and _is_integer(self.alpha):
            raise ParameterError("alpha must be non-integer for a sinh seed")

    @classmethod
    def from_omega(cls, omega, delta=1, seed_kind=SeedKind.COSH, alpha=0.0, kappa=1.0):
        return cls(delta * 2 * kappa * np.cosh(omega), omega, delta, seed_kind, alpha, kappa)

    @classmethod
    def from_energy(cls, mu, seed_kind=SeedKind.COSH, alpha=0.0, kappa=1.0):
        if not abs(mu) > 2 * kappa:
            raise ParameterError(f"|mu| = {abs(mu)} must exceed the band edge {2 * kappa}")
        return cls(mu, float(np.arccosh(abs(mu) / (2 * kappa))), int(np.sign(mu)),
                   seed_kind, alpha, kappa)

    def with_kind(self, seed_kind, alpha=None):
        return LevelSpec(self.mu, self.omega, self.delta, seed_kind,
                         self.alpha if alpha is None else alpha, self.kappa)

    def to_dict(self):
        return {"mu": self.mu, "omega": self.omega, "delta": self.delta,
                "seed_kind": self.seed_kind.value, "alpha": self.alpha, "kappa": self.kappa}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["mu"]), float(d["omega"]), int(d["delta"]),
                   d.get("seed_kind", "cosh"), float(d.get("alpha", 0.0)),
                   float(d.get("kappa", 1.0)))


@dataclass(frozen=True, eq=False)
class SeedSolution:
    """Solution of H phi = mu phi stored as log(phi) on sites offset.. ."""

    level: LevelSpec
    offset: int
    logphi: np.ndarray

    @property
    def index(self):
        return self.offset + np.arange(len(self.logphi))

    @property
    def phi(self):
        return np.exp(self.logphi)

    def log_at(self, n):
        i = np.asarray(n) - self.offset
        if np.any(i < 0) or np.any(i >= len(self.logphi)):
            raise SeedError(f"seed covers sites {self.offset}..{self.offset + len(self.logphi) - 1}, "
                            f"needed {np.min(n)}..{np.max(n)}")
        return self.logphi[i]

    def values(self, n):
        return np.exp(self.log_at(n))


def closed_form_log(kind, omega, alpha, n, delta=1):
    """log of cosh/sinh[omega (n - alpha)], staggered by (-1)^n when delta < 0."""
    x = omega * (np.asarray(n, float) - alpha)
    out = log_cosh(x) if SeedKind(kind) is SeedKind.COSH else log_sinh(x)
    if delta < 0:
        out = out + 1j * np.pi * (np.asarray(n) % 2)
    return out


def _wrap(logz):
    """Reduce the imaginary part of a complex log to (-pi, pi]."""
    return logz.real + 1j * np.angle(np.exp(1j * logz.imag))


def _log_add(la, lb):
    """log(exp(la) + exp(lb)) without overflow."""
    m = np.maximum(la.real, lb.real)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return m + np.log(np.exp(la - m) + np.exp(lb - m))


def difference_residual(lat: Lattice, mu, offset, logphi):
    """Relative residual of kappa_n phi_{n-1} + kappa_{n+1} phi_{n+1} + V_n phi_n = mu phi_n.

    Evaluated at the interior points of the supplied sequence, each term
    scaled by the largest of the three neighbouring |phi|.
    """
    logphi = np.asarray(logphi, complex)
    n = offset + np.arange(1, len(logphi) - 1)
    lm, l0, lp = logphi[:-2], logphi[1:-1], logphi[2:]
    scale = np.maximum(np.maximum(lm.real, l0.real), lp.real)
    scale = np.where(np.isfinite(scale), scale, 0.0)
    a = lat.hop(n) * np.exp(lm - scale)
    b = lat.hop(n + 1) * np.exp(lp - scale)
    c = (lat.site(n) - mu) * np.exp(l0 - scale)
    size = np.abs(a) + np.abs(b) + np.abs(c)
    return np.abs(a + b + c) / np.where(size > 0, size, 1.0)


def _extend(lat, mu, offset, logphi, lo, hi):
    """Extend a log-seed to cover lo..hi by stepping the difference equation outward."""
    vals = list(logphi)
    start = offset
    while start > lo:
        n = start  # solve the equation at site n for phi_{n-1}
        l0, l1 = vals[0], vals[1]
        t1 = np.log(complex(mu - lat.site(n))) + l0
        t2 = np.log(complex(-lat.hop(n + 1))) + l1
        new = _log_add(np.array([t1]), np.array([t2]))[0] - np.log(complex(lat.hop(n)))
        vals.insert(0, complex(_wrap(np.array([new]))[0]))
        start -= 1
    end = start + len(vals) - 1
    while end < hi:
        n = end  # solve at site n for phi_{n+1}
        l0, lm = vals[-1], vals[-2]
        t1 = np.log(complex(mu - lat.site(n))) + l0
        t2 = np.log(complex(-lat.hop(n))) + lm
        new = _log_add(np.array([t1]), np.array([t2]))[0] - np.log(complex(lat.hop(n + 1)))
        vals.append(complex(_wrap(np.array([new]))[0]))
        end += 1
    arr = np.array(vals, complex)
    return arr[lo - start: hi - start + 1]


def _homogeneous(lat, tol=1e-12):
    return (np.all(np.abs(lat.hops - lat.kappa_inf) <= tol * lat.kappa_inf)
            and np.all(np.abs(lat.sites) <= tol * lat.kappa_inf))


def build_seed(level: LevelSpec, lat: Lattice, values=None, values_offset=None,
               log_values=False, pad=SEED_PAD, tol=EXPLICIT_TOL) -> SeedSolution:
    """Seed sequence for ``level`` covering the lattice window plus ``pad`` sites.

    Cosh and sinh seeds use the closed forms (staggered for mu < 0) and need
    a homogeneous lattice.  Explicit seeds take ``values`` on sites starting
    at ``values_offset`` (default: the lattice offset), are checked against the
    difference equation, and are extended to the padded window by the
    recurrence with the lattice's homogeneous continuation.  The outward
    recurrence is only stable where the seed grows, so explicit values
    should span the seed's minimum.
    """
    if abs(level.kappa - lat.kappa_inf) > 1e-12 * lat.kappa_inf:
        raise ParameterError("level kappa differs from the lattice asymptotic hopping")
    lo, hi = lat.offset - pad, lat.last + pad
    if level.seed_kind is not SeedKind.EXPLICIT:
        if values is not None:
            raise ParameterError("values are only accepted for explicit seeds")
        if not _homogeneous(lat):
            raise LatticeError("closed-form seeds need a homogeneous lattice; pass an explicit seed")
        n = np.arange(lo, hi + 1)
        logphi = closed_form_log(level.seed_kind, level.omega, level.alpha, n, level.delta)
        if not np.all(np.isfinite(logphi.real)):
            raise SeedError("seed vanishes at an integer site")
        return SeedSolution(level, lo, logphi)
    if values is None:
        raise ParameterError("explicit seed requires values")
    values = np.asarray(values, complex)
    if values.ndim != 1 or len(values) < 3:
        raise ParameterError("explicit seed needs at least three values")
    off = lat.offset if values_offset is None else int(values_offset)
    if log_values:
        logv = values
    else:
        if np.any(values == 0):
            raise SeedError("explicit seed vanishes at site(s) "
                            f"{(off + np.flatnonzero(values == 0)).tolist()}")
        logv = np.log(values)
    if not np.all(np.isfinite(logv.real)):
        raise SeedError("explicit seed vanishes or is not finite")
    res = difference_residual(lat, level.mu, off, logv)
    if res.size and res.max() > tol:
        worst = off + 1 + int(np.argmax(res))
        raise SeedError(f"explicit seed violates the difference equation at n={worst} "
                        f"(relative residual {res.max():.2e})")
    logphi = _extend(lat, level.mu, off, logv, min(lo, off), max(hi, off + len(logv) - 1))
    start = min(lo, off)
    logphi = logphi[lo - start: hi - start + 1]
    if not np.all(np.isfinite(logphi.real)):
        raise SeedError("seed vanishes inside the padded window")
    return SeedSolution(level, lo, logphi)


# ---------------------------------------------------------------------------
# factorization
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FactorizationOps:
    """Coefficients of R and Q on bonds ``first .. first + len(r) - 1``.

    (R psi)_n = r_n psi_n + r_bar_n psi_{n-1};  (Q chi)_n = q_n chi_n + q_bar_n chi_{n+1}
    with q_n = -r_n and q_bar_n = -r_bar_{n+1}; q_bar has one entry fewer.
    """

    first: int
    r: np.ndarray
    r_bar: np.ndarray
    q: np.ndarray
    q_bar: np.ndarray
    mu: float

    def _coef(self, arr, n):
        i = np.asarray(n) - self.first
        if np.any(i < 0) or np.any(i >= len(arr)):
            raise SeedError("factorization coefficients do not cover the requested sites")
        return arr[i]

    def apply_R(self, psi, offset):
        """R acting on psi (sites offset..offset+M-1, zero outside); result on offset..offset+M."""
        psi = np.asarray(psi, complex)
        m = len(psi)
        n = offset + np.arange(m + 1)
        ext = np.concatenate([[0.0], psi, [0.0]])
        return self._coef(self.r, n) * ext[1:] + self._coef(self.r_bar, n) * ext[:-1]

    def apply_Q(self, chi, offset):
        """Q acting on chi (sites offset..offset+M); result on offset..offset+M-1."""
        chi = np.asarray(chi, complex)
        n = offset + np.arange(len(chi) - 1)
        return self._coef(self.q, n) * chi[:-1] + self._coef(self.q_bar, n) * chi[1:]

    def transport_log(self, offset, logpsi):
        """Apply R to a log-stored sequence; returns (new_offset, log values)."""
        logpsi = np.asarray(logpsi, complex)
        lo = max(offset + 1, self.first)
        hi = min(offset + len(logpsi) - 1, self.first + len(self.r) - 1)
        if hi < lo:
            raise SeedError("no overlap between sequence and factorization")
        n = np.arange(lo, hi + 1)
        l0 = logpsi[n - offset]
        lm = logpsi[n - 1 - offset]
        a = np.log(self._coef(self.r, n)) + l0
        b = np.log(self._coef(self.r_bar, n)) + lm
        return lo, _wrap(_log_add(a, b))


def _r_coeffs(lat: Lattice, seed: SeedSolution, bonds):
    kap = lat.hop(bonds)
    ratio = np.exp(seed.log_at(bonds - 1) - seed.log_at(bonds))
    r = -psqrt(kap * ratio)
    return r, -kap / r


def factorize(lat: Lattice, seed: SeedSolution) -> FactorizationOps:
    """R and Q coefficients on bonds lat.offset-1 .. lat.last+1."""
    first = lat.offset - 1
    bonds = np.arange(first, lat.last + 2)
    logs = seed.log_at(np.arange(first - 1, lat.last + 2))
    if not np.all(np.isfinite(logs.real)):
        raise SeedError("seed vanishes at a site needed by the factorization")
    r, rb = _r_coeffs(lat, seed, bonds)
    return FactorizationOps(first, r, rb, -r, -rb[1:], seed.level.mu)


def _partner_arrays(lat, seed, lo, hi):
    """Partner hops on bonds lo..hi+1, sites on lo..hi, and r/r_bar on bonds lo-1..hi+1."""
    bonds = np.arange(lo - 1, hi + 2)
    logs = seed.log_at(np.arange(lo - 2, hi + 2))
    if not np.all(np.isfinite(logs.real)):
        raise SeedError("seed vanishes at a site needed by the Darboux step")
    r, rb = _r_coeffs(lat, seed, bonds)
    k2 = lat.hop(bonds[1:]) * r[:-1] / r[1:]
    n = np.arange(lo, hi + 1)
    up = np.exp(seed.log_at(n + 1) - seed.log_at(n))
    down = np.exp(seed.log_at(n) - seed.log_at(n - 1))
    v2 = lat.site(n) + lat.hop(n + 1) * up - lat.hop(n) * down
    return k2, v2, FactorizationOps(lo - 1, r, rb, -r, -rb[1:], seed.level.mu)


def darboux_step(lat: Lattice, seed: SeedSolution) -> Lattice:
    """Partner lattice with the seed's level added to the spectrum."""
    k2, v2, _ = _partner_arrays(lat, seed, lat.offset, lat.last)
    return Lattice(lat.offset, k2, v2, lat.kappa_inf)


@dataclass(frozen=True, eq=False)
class BoundState:
    energy: float
    offset: int
    amplitudes: np.ndarray


def partner_bound_state(lat: Lattice, seed: SeedSolution) -> BoundState:
    """Normalised bound state of the partner lattice, the kernel of Q.

    Built by the two-term recurrence q_n psi_n + q_bar_n psi_{n+1} = 0, which
    reproduces |psi_n|^2 proportional to 1/|kappa_n phi_n phi_{n-1}|.
    """
    ops = factorize(lat, seed)
    n = np.arange(lat.offset, lat.last)
    steps = np.log(-ops._coef(ops.q, n) / ops._coef(ops.q_bar, n))
    logpsi = np.concatenate([[0.0], np.cumsum(steps)])
    logpsi = logpsi - logpsi.real.max()
    psi = np.exp(logpsi)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2))
    return BoundState(seed.level.mu, lat.offset, psi)


# ---------------------------------------------------------------------------
# level pairs with vanishing site energies
# ---------------------------------------------------------------------------

def _add_pair(lat: Lattice, seed: SeedSolution):
    a, b = lat.offset, lat.last
    k2, v2, ops1 = _partner_arrays(lat, seed, a - 1, b + 1)
    mid = Lattice(a - 1, k2, v2, lat.kappa_inf)
    # second seed: R applied to the staggered first seed, equal to 2 (-1)^n r_n phi_n
    n = np.arange(a - 2, b + 3)
    log2 = (np.log(2.0) + 1j * np.pi * (n % 2) + np.log(ops1._coef(ops1.r, n))
            + seed.log_at(n))
    level2 = LevelSpec(-seed.level.mu, seed.level.omega, -seed.level.delta,
                       SeedKind.EXPLICIT, seed.level.alpha, seed.level.kappa)
    seed2 = SeedSolution(level2, a - 2, _wrap(log2))
    k3, v3, ops2 = _partner_arrays(mid, seed2, a, b)
    return Lattice(a, k3, v3, lat.kappa_inf), (ops1, ops2)


def add_level_pair(lat: Lattice, seed: SeedSolution, v_tol=1e-10) -> Lattice:
    """Add levels +mu and -mu so that the site energies stay zero."""
    if np.max(np.abs(lat.sites), initial=0.0) > v_tol:
        raise LatticeError("add_level_pair needs vanishing site energies")
    out, _ = _add_pair(lat, seed)
    return out


# ---------------------------------------------------------------------------
# closed-form families
# ---------------------------------------------------------------------------

def family_hops(kind, N, omega1, alpha, n, kappa=1.0, branch="chain"):
    """Closed-form hopping amplitudes of the 2N-level families.

    kappa_n^2 = kappa^2 f(x) f(x-2N-1) / (f(x-N) f(x-N-1)) with x = n - alpha and
    f = cosh or sinh of omega1 * (.).  ``branch="chain"`` picks the square-root
    signs produced by successive Darboux steps (imaginary bonds alternate in
    sign, the middle real bond carries (-1)^N); ``"principal"`` takes the
    principal root everywhere.
    """
    kind = SeedKind(kind)
    n = np.asarray(n)
    x = n - alpha
    lf = log_cosh if kind is SeedKind.COSH else log_sinh
    logs = (lf(omega1 * x) + lf(omega1 * (x - 2 * N - 1))
            - lf(omega1 * (x - N)) - lf(omega1 * (x - N - 1)))
    if not np.all(np.isfinite(logs.real)):
        raise ParameterError("alpha must be non-integer for the sinh family")
    mag = kappa * np.exp(0.5 * logs.real)
    negative = np.cos(logs.imag) < 0
    k = np.where(negative, 1j * mag, mag + 0j)
    if kind is SeedKind.SINH and branch == "chain":
        m = n - np.floor(alpha)
        block = (m >= 1) & (m <= 2 * N + 1)
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        k = np.where(block, sign * np.where(negative, 1j * mag, -mag), k)
    elif branch not in ("chain", "principal"):
        raise ParameterError(f"unknown branch {branch!r}")
    return k


def family_levels(kind, N, omega1, alpha=0.0, kappa=1.0):
    """The 2N levels +-2 kappa cosh(k omega1), k = 1..N, as LevelSpecs."""
    out = []
    for k in range(1, N + 1):
        for d in (1, -1):
            out.append(LevelSpec.from_omega(k * omega1, d, kind, alpha, kappa))
    return out


def family_center(N, alpha):
    """Symmetry point of the family's hopping profile."""
    return alpha + N + 0.5


def auto_window(kind, N, omega1, alpha, kappa=1.0, tol=1e-12, min_sites=400):
    """Smallest window (>= min_sites) whose outer 10% at each end is uniform to tol."""
    c = family_center(N, alpha)
    size = int(min_sites)
    while True:
        off = int(round(c)) - size // 2
        edge = int(np.ceil(0.1 * size))
        n = np.concatenate([off + np.arange(edge + 1), off + size - edge + np.arange(edge + 1)])
        dev = np.abs(family_hops(kind, N, omega1, alpha, n, kappa) - kappa)
        if dev.max() < tol * kappa:
            return off, size
        size = int(size * 1.25) + 2
        if size > 10 ** 7:
            raise ParameterError("omega1 too small for a finite window")


def synthesize_family(kind, N, omega1, alpha=0.0, kappa=1.0, sites=None, branch="chain",
                      tol=1e-12) -> Lattice:
    """Closed-form lattice carrying levels +-2 kappa cosh(k omega1), k = 1..N, with V = 0.

    ``sites=None`` sizes the window automatically (at least 400 sites) so that
    the outer tenth at each end is uniform to ``tol``.
    """
    kind = SeedKind(kind)
    if kind is SeedKind.EXPLICIT:
        raise ParameterError("family kind must be cosh or sinh")
    if int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    if not omega1 > 0:
        raise ParameterError("omega1 must be positive")
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    if kind is SeedKind.SINH and _is_integer(alpha):
        raise ParameterError("alpha must be non-integer for the sinh family")
    N = int(N)
    if sites is None:
        off, size = auto_window(kind, N, omega1, alpha, kappa, tol)
    else:
        size = int(sites)
        if size < 2:
            raise ParameterError("sites must be >= 2")
        off = int(round(family_center(N, alpha))) - size // 2
    n = off + np.arange(size + 1)
    return Lattice(off, family_hops(kind, N, omega1, alpha, n, kappa, branch),
                   np.zeros(size), kappa)


@dataclass(frozen=True)
class IterationReport:
    kind: str
    N: int
    omega1: float
    alpha: float
    max_hop_residual: float
    max_site_energy: float
    gauge_flips: int
    iterated: Lattice
    closed_form: Lattice


def iterate_family(kind, N, omega1, alpha=0.0, kappa=1.0, sites=None) -> Lattice:
    """Build the 2N-level lattice by N successive level-pair additions.

    Stage j uses the free-chain seed at mu = 2 kappa cosh(j omega1): sinh for
    the sinh family, alternately cosh (odd j) and sinh (even j) for the cosh
    family, carried through all earlier R maps.
    """
    kind = SeedKind(kind)
    ref = synthesize_family(kind, N, omega1, alpha, kappa, sites)
    pad = 4 * N + 8
    lo, hi = ref.offset - pad, ref.last + pad
    lat = Lattice.uniform(hi - lo + 1, kappa, lo)
    maps = []
    g_lo, g_hi = lo - SEED_PAD - 2 * N - 2, hi + SEED_PAD + 2
    grid = np.arange(g_lo, g_hi + 1)
    for j in range(1, N + 1):
        if kind is SeedKind.SINH or j % 2 == 0:
            sk = SeedKind.SINH
        else:
            sk = SeedKind.COSH
        level = LevelSpec.from_omega(j * omega1, 1, SeedKind.EXPLICIT, alpha, kappa)
        logv = closed_form_log(sk, j * omega1, alpha, grid)
        off = g_lo
        for ops in maps:
            off, logv = ops.transport_log(off, logv)
        if j == 1:
            seed = SeedSolution(level, off, logv)
        else:
            # transported seeds are exact up to round-off, which grows like
            # omega1**-2 per R map, so validate loosely here
            seed = build_seed(level, lat, values=logv, values_offset=off, log_values=True,
                              tol=1e-5)
        lat, ops_pair = _add_pair(lat, seed)
        maps.extend(ops_pair)
    return lat.crop(ref.offset, ref.last)


def _mp_psqrt(mp, z, snap):
    if abs(z.imag) <= snap * abs(z):
        return mp.mpc(0, mp.sqrt(-z.real)) if z.real < 0 else mp.mpc(mp.sqrt(z.real), 0)
    return mp.sqrt(z)


def _mp_step(mp, hops, sites, kap, phi, lo, hi, snap):
    """One Darboux step on dict-stored arrays; returns partner hops, sites and R coefficients."""
    def hop(n):
        return hops.get(n, kap)

    # R on every bond the seed covers, so that later seeds can be transported
    r, rb = {}, {}
    for n in phi:
        if n - 1 in phi:
            r[n] = -_mp_psqrt(mp, hop(n) * phi[n - 1] / phi[n], snap)
            rb[n] = -hop(n) / r[n]
    k2 = {n: hop(n) * r[n - 1] / r[n] for n in range(lo, hi + 2)}
    v2 = {n: sites.get(n, 0) + hop(n + 1) * phi[n + 1] / phi[n] - hop(n) * phi[n] / phi[n - 1]
          for n in range(lo, hi + 1)}
    return k2, v2, (r, rb)


def iterate_family_mp(kind, N, omega1, alpha=0.0, kappa=1.0, sites=None, dps=40) -> Lattice:
    """``iterate_family`` carried out in ``dps``-digit arithmetic with mpmath.

    Transporting seeds through earlier R maps cancels leading digits (the
    loss grows as omega1 decreases), so the double-precision route cannot
    resolve bonds to 1e-10 for omega1 ~ 0.01 and N = 3.  Same seeds, same
    branch rules; only the final hops and site energies are rounded.
    """
    import mpmath

    kind = SeedKind(kind)
    ref = synthesize_family(kind, N, omega1, alpha, kappa, sites)
    mp = mpmath.mp
    with mpmath.workdps(dps):
        snap = mp.mpf(10) ** (-(dps // 2))
        pad = 4 * N + 8
        a, b = ref.offset - pad, ref.last + pad
        kap = mp.mpf(kappa)
        w, al = mp.mpf(omega1), mp.mpf(alpha)
        hops, vs = {}, {}
        maps = []
        grid = range(a - SEED_PAD - 4 * N - 4, b + SEED_PAD + 3)
        for j in range(1, N + 1):
            f = mp.sinh if (kind is SeedKind.SINH or j % 2 == 0) else mp.cosh
            phi = {n: mp.mpc(f(j * w * (n - al))) for n in grid}
            for r, rb in maps:
                phi = {n: r[n] * phi[n] + rb[n] * phi[n - 1]
                       for n in r if n in phi and n - 1 in phi}
            k2, v2, ops1 = _mp_step(mp, hops, vs, kap, phi, a - 1, b + 1, snap)
            r1 = ops1[0]
            phi2 = {n: 2 * (-1) ** (n % 2) * r1[n] * phi[n] for n in r1}
            hops, vs, ops2 = _mp_step(mp, k2, v2, kap, phi2, a, b, snap)
            maps.extend([ops1, ops2])
        lo, hi = ref.offset, ref.last
        k = np.array([complex(hops[n]) for n in range(lo, hi + 2)])
        v = np.array([complex(vs[n]) for n in range(lo, hi + 1)])
    return Lattice(lo, k, v, kappa)


def align_gauge(lat: Lattice, ref: Lattice):
    """Flip bond signs of ``lat`` towards ``ref`` by a site-sign gauge.

    A gauge s_n = +-1 multiplies kappa_n by s_{n-1} s_n.  Only gauges with
    s = +1 on both sides of the window are admissible, since flipping one
    asymptotic region changes the sign of t; so the flips are applied only if
    their number is even.  Returns (aligned lattice, number of flipped bonds).
    """
    if lat.offset != ref.offset or lat.size != ref.size:
        raise ParameterError("lattices must share a window")
    flip = np.real(lat.hops * np.conj(ref.hops)) < 0
    count = int(flip.sum())
    if count % 2:
        return lat, count
    hops = np.where(flip, -lat.hops, lat.hops)
    return Lattice(lat.offset, hops, lat.sites, lat.kappa_inf), count


def iterate_vs_closed_form(kind, N, omega1, alpha=0.0, kappa=1.0, sites=None,
                           dps=None) -> IterationReport:
    """Compare the iterated construction with the closed form bond by bond.

    Square-root branches chosen step by step may differ from the closed form
    by an even number of bond signs; these are removed with ``align_gauge``
    and counted in ``gauge_flips`` before the residual is taken.  ``dps``
    switches the iteration to mpmath with that many digits.
    """
    ref = synthesize_family(kind, N, omega1, alpha, kappa, sites)
    if dps is None:
        it = iterate_family(kind, N, omega1, alpha, kappa, sites)
    else:
        it = iterate_family_mp(kind, N, omega1, alpha, kappa, sites, dps)
    aligned, flips = align_gauge(it, ref)
    return IterationReport(SeedKind(kind).value, int(N), float(omega1), float(alpha),
                           float(np.max(np.abs(aligned.hops - ref.hops))),
                           float(np.max(np.abs(it.sites))), flips, it, ref)
