"""Tight-binding chain data model, Hamiltonian action and truncated spectrum.

A lattice is stored over a finite window of sites ``offset .. offset+M-1``.
Hopping ``hops[i]`` is the amplitude kappa_n with ``n = offset + i`` and
couples site ``n-1`` to site ``n``; there are ``M + 1`` of them, the first and
last linking the window to the homogeneous continuation outside it.  Outside
the window the chain is taken to be uniform (kappa_n = kappa_inf, V_n = 0).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, LatticeError, ParameterError


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Lattice:
    """Finite window of an asymptotically homogeneous chain."""

    offset: int
    hops: np.ndarray
    sites: np.ndarray
    kappa_inf: float = 1.0

    def __post_init__(self):
        hops = _frozen(self.hops)
        sites = _frozen(self.sites)
        if hops.ndim != 1 or sites.ndim != 1:
            raise DimensionError("hops and sites must be one-dimensional")
        if len(sites) < 1:
            raise DimensionError("lattice needs at least one site")
        if len(hops) != len(sites) + 1:
            raise DimensionError(
                f"expected {len(sites) + 1} hops for {len(sites)} sites, got {len(hops)}")
        if not np.all(np.isfinite(hops)) or not np.all(np.isfinite(sites)):
            raise LatticeError("non-finite hopping or site energy")
        if np.any(hops == 0):
            raise LatticeError("zero hopping amplitude at bond(s) "
                               f"{(self.offset + np.flatnonzero(hops == 0)).tolist()}")
        if not self.kappa_inf > 0:
            raise ParameterError("kappa_inf must be positive")
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "kappa_inf", float(self.kappa_inf))
        object.__setattr__(self, "hops", hops)
        object.__setattr__(self, "sites", sites)

    # --- construction -------------------------------------------------
    @classmethod
    def uniform(cls, size, kappa=1.0, offset=None):
        """Defect-free chain of ``size`` sites centred on n = 0 by default."""
        if size < 1:
            raise ParameterError("size must be >= 1")
        if offset is None:
            offset = -(size // 2)
        return cls(offset, np.full(size + 1, kappa, complex), np.zeros(size, complex), kappa)

    @classmethod
    def from_functions(cls, offset, size, hop, site=None, kappa_inf=1.0):
        """Sample ``hop(n)`` on bonds and ``site(n)`` on sites of the window."""
        n = offset + np.arange(size + 1)
        hops = np.asarray(hop(n), complex)
        sites = np.zeros(size, complex) if site is None else np.asarray(site(n[:-1]), complex)
        return cls(offset, hops, sites, kappa_inf)

    # --- indexing -----------------------------------------------------
    @property
    def size(self):
        return len(self.sites)

    @property
    def last(self):
        """Index of the last stored site."""
        return self.offset + self.size - 1

    @property
    def site_index(self):
        return self.offset + np.arange(self.size)

    @property
    def bond_index(self):
        return self.offset + np.arange(self.size + 1)

    def hop(self, n):
        """kappa_n with homogeneous continuation outside the stored window."""
        n = np.asarray(n)
        i = n - self.offset
        inside = (i >= 0) & (i <= self.size)
        out = np.where(inside, self.hops[np.clip(i, 0, self.size)], self.kappa_inf)
        return out.astype(complex)

    def site(self, n):
        """V_n with V = 0 outside the stored window."""
        n = np.asarray(n)
        i = n - self.offset
        inside = (i >= 0) & (i < self.size)
        return np.where(inside, self.sites[np.clip(i, 0, self.size - 1)], 0.0).astype(complex)

    def crop(self, lo, hi):
        """Sub-window with sites lo..hi inclusive (continuation used outside storage)."""
        if hi < lo:
            raise ParameterError("empty crop range")
        n = np.arange(lo, hi + 2)
        return Lattice(lo, self.hop(n), self.site(n[:-1]), self.kappa_inf)

    # --- properties ---------------------------------------------------
    def is_hermitian(self, tol=1e-12):
        """True when every hop and site energy is real."""
        scale = max(1.0, float(np.max(np.abs(self.hops))))
        return bool(np.all(np.abs(self.hops.imag) <= tol * scale)
                    and np.all(np.abs(self.sites.imag) <= tol * scale))

    def matrix(self):
        """Dense hard-wall Hamiltonian matrix on the stored window."""
        inner = self.hops[1:-1]
        return np.diag(self.sites) + np.diag(inner, -1) + np.diag(inner, 1)

    # --- serialization ------------------------------------------------
    def to_dict(self):
        return {
            "offset": self.offset,
            "kappa_inf": self.kappa_inf,
            "hops": [[float(z.real), float(z.imag)] for z in self.hops],
            "sites": [[float(z.real), float(z.imag)] for z in self.sites],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            hops = np.array([complex(a, b) for a, b in d["hops"]])
            sites = np.array([complex(a, b) for a, b in d["sites"]])
            return cls(int(d["offset"]), hops, sites, float(d.get("kappa_inf", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise LatticeError(f"malformed lattice description: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def apply_hamiltonian(lat: Lattice, psi):
    """Return H psi with hard walls at both ends of the window.

    ``psi`` may carry trailing axes (e.g. a block of column vectors).
    """
    psi = np.asarray(psi)
    if psi.shape[:1] != (lat.size,):
        raise DimensionError(f"state has {psi.shape[:1]} entries, lattice has {lat.size} sites")
    extra = (slice(None),) + (None,) * (psi.ndim - 1)
    inner = lat.hops[1:-1][extra]
    out = lat.sites[extra] * psi
    out[1:] += inner * psi[:-1]
    out[:-1] += inner * psi[1:]
    return out


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    band_edge: float
    bound_levels: np.ndarray
    max_imag: float
    edge_tol: float = field(default=1e-5)

    @property
    def band_values(self):
        keep = np.abs(self.eigenvalues.real) <= self.band_edge * (1 + self.edge_tol)
        return self.eigenvalues[keep]

    @property
    def n_bound(self):
        return len(self.bound_levels)


def spectrum(lat: Lattice, edge_tol=1e-5, method="qr") -> SpectrumReport:
    """Eigenvalues of the truncated Hamiltonian, split into band and bound parts.

    Bound levels are those with |Re E| > 2 kappa (1 + edge_tol).  ``method``
    selects the in-house Hessenberg QR ("qr") or LAPACK ("lapack").
    """
    if lat.size < 2:
        raise DimensionError("spectrum needs at least two sites")
    if method == "qr":
        from .eigen import hessenberg_eigvals
        ev = hessenberg_eigvals(lat.matrix())
    elif method == "lapack":
        ev = np.linalg.eigvals(lat.matrix())
    else:
        raise ParameterError(f"unknown eigen method {method!r}")
    ev = ev[np.lexsort((ev.imag, ev.real))]
    edge = 2.0 * lat.kappa_inf
    bound = ev[np.abs(ev.real) > edge * (1 + edge_tol)]
    return SpectrumReport(ev, edge, bound, float(np.max(np.abs(ev.imag))), edge_tol)


def defect_window(lat: Lattice, tol=1e-8) -> range:
    """Smallest index range outside which the chain is uniform to ``tol``.

    Bond n counts as defective when |kappa_n - kappa| >= tol, site n when
    |V_n| >= tol.  Returns an empty range for a defect-free window and raises
    LatticeError if the deviations reach the edge of the stored window, since
    then there is no asymptotic region on that side.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    bad_b = np.abs(lat.hops - lat.kappa_inf) >= tol
    bad_s = np.abs(lat.sites) >= tol
    idx = np.concatenate([lat.bond_index[bad_b], lat.site_index[bad_s]])
    if idx.size == 0:
        return range(0)
    lo, hi = int(idx.min()), int(idx.max())
    if lo <= lat.offset or hi >= lat.last + 1:
        side = "left" if lo <= lat.offset else "right"
        raise LatticeError(
            f"lattice is not homogeneous to {tol:g} at its {side} edge; enlarge the window")
    return range(lo, hi + 1)
