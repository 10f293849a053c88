"""Double-double transfer recurrence for ill-conditioned lattices.

Near the band edges the small-omega non-Hermitian family amplifies a
relative hop perturbation of 1e-16 into O(1) changes of r.  The routines
here carry every quantity as an unevaluated sum hi + lo of two doubles
(about 32 significant digits); the closed-form hops are evaluated with
mpmath and split into such pairs.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .darboux import SeedKind, auto_window, family_center, family_hops
from .errors import ParameterError

_SPLITTER = 134217729.0  # 2**27 + 1


@njit(cache=True, inline="always")
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True, inline="always")
def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(cache=True, inline="always")
def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(cache=True, inline="always")
def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    e += t
    s, e = _quick_two_sum(s, e)
    e += f
    return _quick_two_sum(s, e)


@njit(cache=True, inline="always")
def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e += ah * bl + al * bh
    return _quick_two_sum(p, e)


@njit(cache=True, inline="always")
def _cdd_mul(a, b):
    """Complex double-double product; a, b are (re_hi, re_lo, im_hi, im_lo)."""
    rr = _dd_mul(a[0], a[1], b[0], b[1])
    ii = _dd_mul(a[2], a[3], b[2], b[3])
    ri = _dd_mul(a[0], a[1], b[2], b[3])
    ir = _dd_mul(a[2], a[3], b[0], b[1])
    re = _dd_add(rr[0], rr[1], -ii[0], -ii[1])
    im = _dd_add(ri[0], ri[1], ir[0], ir[1])
    return re[0], re[1], im[0], im[1]


@njit(cache=True)
def _recur(hops, inv_hops, sites, energy, psi_last, psi_next):
    """Run psi_{n-1} = ((E - V_n) psi_n - kappa_{n+1} psi_{n+1}) / kappa_n leftward.

    ``hops`` (M+1, 4), ``inv_hops`` (M+1, 4), ``sites`` (M, 4), ``energy``
    (Q, 2) real, starting values (Q, 4).  Returns psi at offset-1 and offset.
    """
    m = sites.shape[0]
    nq = energy.shape[0]
    out = np.empty((nq, 2, 4))
    for j in range(nq):
        nx = (psi_next[j, 0], psi_next[j, 1], psi_next[j, 2], psi_next[j, 3])
        cu = (psi_last[j, 0], psi_last[j, 1], psi_last[j, 2], psi_last[j, 3])
        for i in range(m - 1, -1, -1):
            er = _dd_add(energy[j, 0], energy[j, 1], -sites[i, 0], -sites[i, 1])
            ev = (er[0], er[1], -sites[i, 2], -sites[i, 3])
            a = _cdd_mul(ev, cu)
            k = (hops[i + 1, 0], hops[i + 1, 1], hops[i + 1, 2], hops[i + 1, 3])
            b = _cdd_mul(k, nx)
            re = _dd_add(a[0], a[1], -b[0], -b[1])
            im = _dd_add(a[2], a[3], -b[2], -b[3])
            ik = (inv_hops[i, 0], inv_hops[i, 1], inv_hops[i, 2], inv_hops[i, 3])
            prev = _cdd_mul((re[0], re[1], im[0], im[1]), ik)
            nx = cu
            cu = prev
        for s in range(4):
            out[j, 0, s] = cu[s]
            out[j, 1, s] = nx[s]
    return out


def split_mp(values):
    """(N, 4) double-double pairs (re_hi, re_lo, im_hi, im_lo) of mpmath numbers."""
    import mpmath

    out = np.empty((len(values), 4))
    for i, v in enumerate(values):
        v = mpmath.mpc(v)
        for col, part in ((0, v.real), (2, v.imag)):
            hi = float(part)
            out[i, col] = hi
            out[i, col + 1] = float(part - hi)
    return out


def to_complex(pairs):
    pairs = np.asarray(pairs)
    return (pairs[..., 0] + pairs[..., 1]) + 1j * (pairs[..., 2] + pairs[..., 3])


def family_hops_mp(kind, N, omega1, alpha, n, kappa=1.0, dps=40):
    """Closed-form family hops as mpmath numbers, with the same branch as ``family_hops``.

    Every hop is real or purely imaginary, so its phase is taken from the
    double-precision closed form and only the magnitude is recomputed.
    """
    import mpmath

    kind = SeedKind(kind)
    n = np.asarray(n)
    phase = family_hops(kind, N, omega1, alpha, n, kappa)
    phase = np.where(np.abs(phase.real) >= np.abs(phase.imag), np.sign(phase.real),
                     1j * np.sign(phase.imag))
    out = []
    with mpmath.workdps(dps):
        f = mpmath.cosh if kind is SeedKind.COSH else mpmath.sinh
        w, a, k = mpmath.mpf(omega1), mpmath.mpf(alpha), mpmath.mpf(kappa)
        for nn, ph in zip(n.tolist(), phase):
            x = nn - a
            ratio = f(w * x) * f(w * (x - 2 * N - 1)) / (f(w * (x - N)) * f(w * (x - N - 1)))
            out.append(mpmath.mpc(ph) * k * mpmath.sqrt(abs(ratio)))
    return out


def transfer_scatter_dd(offset, hops_mp, sites_mp, q, kappa=1.0, dps=40):
    """r and t from the double-double recurrence on mpmath-valued hops and site energies.

    Mirrors the double-precision transfer recurrence: start from e^{-iqn} on
    the two right-most sites, step leftward, decompose on the left.
    """
    import mpmath

    q = np.atleast_1d(np.asarray(q, float))
    m = len(sites_mp)
    if len(hops_mp) != m + 1:
        raise ParameterError("need one hop more than site energies")
    last = offset + m - 1
    with mpmath.workdps(dps):
        hops = split_mp(hops_mp)
        inv = split_mp([1 / mpmath.mpc(h) for h in hops_mp])
        sites = split_mp(sites_mp)
        energy = split_mp([2 * mpmath.mpf(kappa) * mpmath.cos(mpmath.mpf(x)) for x in q])[:, :2]
        psi_last = split_mp([mpmath.expj(-mpmath.mpf(x) * last) for x in q])
        psi_next = split_mp([mpmath.expj(-mpmath.mpf(x) * (last + 1)) for x in q])
    res = _recur(hops, inv, sites, np.ascontiguousarray(energy), psi_last, psi_next)
    psi, psi_n = to_complex(res[:, 0]), to_complex(res[:, 1])
    n0 = offset - 1
    eq = np.exp(1j * q)
    denom = eq - 1 / eq
    A = (psi * eq - psi_n) * np.exp(1j * q * n0) / denom
    B = (psi_n - psi / eq) * np.exp(-1j * q * n0) / denom
    return B / A, 1 / A


def scatter_family_dd(kind, N, omega1, alpha=0.0, kappa=1.0, q=None, sites=None, dps=40):
    """Extended-precision scattering of a closed-form family lattice.

    Uses the same window as ``synthesize_family`` and returns a
    ScatteringResult with method TransferMatrix.
    """
    from .scattering import Method, ScatteringResult, _check_grid, default_q_grid, unwrap_phase

    q = default_q_grid() if q is None else _check_grid(q)
    if sites is None:
        off, size = auto_window(kind, N, omega1, alpha, kappa)
    else:
        size = int(sites)
        off = int(round(family_center(N, alpha))) - size // 2
    bonds = off + np.arange(size + 1)
    hops = family_hops_mp(kind, N, omega1, alpha, bonds, kappa, dps)
    r, t = transfer_scatter_dd(off, hops, [0] * size, q, kappa, dps)
    return ScatteringResult(q, r, t, unwrap_phase(np.angle(t)), Method.TRANSFER,
                            np.zeros(q.shape, bool))
