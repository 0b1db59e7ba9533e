"""Spectral form of sparse-grid surrogates and coefficient envelopes.

The basis is the tensorised Chebyshev family T_k(2y - 1) on [0, 1].  A
single-fidelity combination-technique interpolant is converted term by
term through per-dimension Vandermonde solves, which is exact for the
moderate degrees reached here.  The envelope is the tail maximum of
absolute coefficients by total degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from . import midx
from .combiner import GridKit, Surrogate

__all__ = ["SpectralExpansion", "Envelope", "poly_degree_set", "to_spectral", "envelope"]

ENVELOPE_FLOOR_REL = 1e-16


@dataclass
class SpectralExpansion:
    """Coefficients over a downward-closed set of polynomial degrees."""

    degrees: list  # degree multi-indices (tuples of ints >= 0), sorted
    coeffs: np.ndarray  # aligned with degrees
    n_y: int

    def coeff_map(self) -> dict:
        return dict(zip(self.degrees, self.coeffs))

    def evaluate_many(self, Y) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        t = 2.0 * Y - 1.0
        max_deg = [max(p[d] for p in self.degrees) for d in range(self.n_y)]
        vander = [_cheb.chebvander(t[:, d], max_deg[d]) for d in range(self.n_y)]
        out = np.zeros(Y.shape[0])
        for p, c in zip(self.degrees, self.coeffs):
            term = c
            for d in range(self.n_y):
                term = term * vander[d][:, p[d]]
            out += term
        return out

    def max_total_degree(self) -> int:
        return max(sum(p) for p in self.degrees)


@dataclass
class Envelope:
    """values[i] = max |coeff| over total degree >= i, clamped away from zero."""

    values: np.ndarray

    @property
    def k_e(self) -> int:
        return self.values.size - 1


def poly_degree_set(param_set, kit: GridKit) -> list:
    """Polynomial degrees spanned by the nested interpolants of a parameter set.

    The union over member indices of the boxes {0..m(b_j) - 1}.
    """
    s = midx.require_admissible(param_set)
    degrees = set()
    for beta in s:
        ranges = [range(kit.m(b)) for b in beta]
        stack = [()]
        for r in ranges:
            stack = [t + (d,) for t in stack for d in r]
        degrees.update(stack)
    return sorted(degrees)


def _cheb_transform(kit: GridKit, level: int) -> np.ndarray:
    """Inverse Chebyshev-Vandermonde at the level's knots (values -> coeffs)."""
    cache = getattr(kit, "_cheb_inv", None)
    if cache is None:
        cache = kit._cheb_inv = {}
    A = cache.get(level)
    if A is None:
        pts = kit.knots(level)
        V = _cheb.chebvander(2.0 * pts - 1.0, pts.size - 1)
        A = np.linalg.solve(V, np.eye(pts.size))
        cache[level] = A
    return A


def to_spectral(surr: Surrogate) -> SpectralExpansion:
    """Change of basis of a single-fidelity surrogate to Chebyshev coefficients."""
    if surr.n_model != 0:
        raise ValueError("spectral conversion expects a parameter-only surrogate")
    kit = surr.kit
    acc: dict[tuple, float] = {}
    for beta in midx.sorted_indices(surr.indices):
        c = surr.coeffs.get(beta, 0)
        if c == 0:
            continue
        table = surr.tables[beta]
        shape = tuple(kit.m(b) for b in beta)
        coef = table.reshape(shape)
        for d, b in enumerate(beta):
            coef = np.moveaxis(
                np.tensordot(_cheb_transform(kit, b), coef, axes=([1], [d])), 0, d
            )
        it = np.nditer(coef, flags=["multi_index"])
        for v in it:
            key = it.multi_index
            acc[key] = acc.get(key, 0.0) + c * float(v)
    degrees = poly_degree_set({tuple(b) for b in surr.indices}, kit)
    coeffs = np.array([acc.get(p, 0.0) for p in degrees])
    return SpectralExpansion(degrees=degrees, coeffs=coeffs, n_y=surr.n_y)


def envelope(x: SpectralExpansion) -> Envelope:
    """Tail maximum of |coefficients| by total degree."""
    if not x.degrees:
        raise ValueError("expansion has no degrees")
    k_e = x.max_total_degree()
    by_degree = np.zeros(k_e + 1)
    for p, c in zip(x.degrees, x.coeffs):
        d = sum(p)
        by_degree[d] = max(by_degree[d], abs(c))
    vals = np.maximum.accumulate(by_degree[::-1])[::-1]
    floor = max(vals[0] * ENVELOPE_FLOOR_REL, np.finfo(float).tiny)
    return Envelope(values=np.maximum(vals, floor))
