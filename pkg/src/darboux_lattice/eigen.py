"""Eigenvalues of complex upper-Hessenberg matrices by shifted QR iteration.

Single-shift QR with Givens rotations, Wilkinson shifts, and deflation when a
subdiagonal entry becomes negligible.  Only eigenvalues are produced (no Schur
vectors), so each sweep touches just the active diagonal block.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import SpectrumError

_EPS = np.finfo(float).eps


@njit(cache=True)
def _hqr(h, max_sweeps):
    n = h.shape[0]
    w = np.zeros(n, dtype=np.complex128)
    cs = np.zeros(n, dtype=np.complex128)
    sn = np.zeros(n, dtype=np.complex128)
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm = max(norm, abs(h[i, j]))
    if norm == 0.0:
        return w, -1, 0
    hi = n - 1
    total = 0
    while hi >= 0:
        its = 0
        while True:
            # look for a negligible subdiagonal entry from the bottom up
            lo = hi
            while lo > 0:
                s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
                if s == 0.0:
                    s = norm
                if abs(h[lo, lo - 1]) <= 2.220446049250313e-16 * s:
                    h[lo, lo - 1] = 0.0
                    break
                lo -= 1
            if lo == hi:
                w[hi] = h[hi, hi]
                hi -= 1
                break
            if its >= max_sweeps:
                return w, hi, total
            its += 1
            total += 1
            a = h[hi - 1, hi - 1]
            b = h[hi - 1, hi]
            c = h[hi, hi - 1]
            d = h[hi, hi]
            if its % 11 == 0:
                # exceptional shift to break cycles
                mu = d + 0.75 * abs(h[hi, hi - 1]) + 0.4375j * abs(h[hi - 1, hi - 2] if hi - 2 >= lo else c)
            else:
                half = 0.5 * (a - d)
                disc = np.sqrt(half * half + b * c)
                m1 = 0.5 * (a + d) + disc
                m2 = 0.5 * (a + d) - disc
                mu = m1 if abs(m1 - d) < abs(m2 - d) else m2
            for k in range(lo, hi + 1):
                h[k, k] -= mu
            # QR: rotate rows k, k+1 to zero the subdiagonal
            for k in range(lo, hi):
                x = h[k, k]
                y = h[k + 1, k]
                r = np.sqrt(abs(x) ** 2 + abs(y) ** 2)
                if r == 0.0:
                    cs[k] = 1.0
                    sn[k] = 0.0
                    continue
                ck = x / r
                sk = y / r
                cs[k] = ck
                sn[k] = sk
                for j in range(k, hi + 1):
                    t1 = h[k, j]
                    t2 = h[k + 1, j]
                    h[k, j] = np.conj(ck) * t1 + np.conj(sk) * t2
                    h[k + 1, j] = -sk * t1 + ck * t2
            # RQ: apply the adjoint rotations from the right
            for k in range(lo, hi):
                ck = cs[k]
                sk = sn[k]
                top = min(k + 2, hi)
                for i in range(lo, top + 1):
                    t1 = h[i, k]
                    t2 = h[i, k + 1]
                    h[i, k] = t1 * ck + t2 * sk
                    h[i, k + 1] = -t1 * np.conj(sk) + t2 * np.conj(ck)
            for k in range(lo, hi + 1):
                h[k, k] += mu
    return w, -1, total


def _is_hessenberg(a):
    return not np.any(np.tril(a, -2))


def hessenberg_eigvals(a, max_sweeps=60):
    """Eigenvalues of a square complex matrix.

    Non-Hessenberg input is first reduced with ``scipy.linalg.hessenberg``.
    Raises SpectrumError if some eigenvalue needs more than ``max_sweeps``
    QR sweeps.
    """
    a = np.array(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix required")
    if a.shape[0] == 0:
        return np.zeros(0, complex)
    if not np.all(np.isfinite(a)):
        raise SpectrumError("matrix has non-finite entries")
    if not _is_hessenberg(a):
        from scipy.linalg import hessenberg
        a = hessenberg(a).astype(np.complex128)
    w, stuck, sweeps = _hqr(np.ascontiguousarray(a), max_sweeps)
    if stuck >= 0:
        raise SpectrumError(
            f"QR iteration failed to deflate row {stuck} of {a.shape[0]} "
            f"after {max_sweeps} sweeps ({sweeps} sweeps in total)")
    return w
