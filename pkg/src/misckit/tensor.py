"""Lagrange interpolation and quadrature on tensor-product grids over [0, 1]^n.

Interpolation uses the second barycentric form; quadrature weights against
the uniform weight come from a change to the Chebyshev basis, whose
integrals are known in closed form.  Barycentric and quadrature weights
are cached per knot vector.
"""

from __future__ import annotations

import threading

import numpy as np
from numpy.polynomial import chebyshev as _cheb

__all__ = [
    "TensorGrid",
    "barycentric_weights",
    "lagrange_basis_row",
    "lagrange_eval_1d",
    "quad_weights_1d",
    "tensor_interp_eval",
]

_cache_lock = threading.Lock()
_bary_cache: dict[tuple[float, ...], np.ndarray] = {}
_quad_cache: dict[tuple[float, ...], np.ndarray] = {}


def _check_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size < 1:
        raise ValueError("points must be a non-empty 1D array")
    if np.unique(pts).size != pts.size:
        raise ValueError("points must be distinct")
    return pts


def barycentric_weights(points) -> np.ndarray:
    pts = _check_points(points)
    key = tuple(pts.tolist())
    with _cache_lock:
        w = _bary_cache.get(key)
    if w is not None:
        return w
    diff = pts[:, None] - pts[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    w = w / np.max(np.abs(w))
    with _cache_lock:
        _bary_cache[key] = w
    return w


def lagrange_basis_row(points, y) -> np.ndarray:
    """Values of all Lagrange basis polynomials at y, shape (len(y), m).

    Exact-node hits are routed around the barycentric singularity.
    """
    pts = _check_points(points)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = barycentric_weights(pts)
    d = y[:, None] - pts[None, :]
    hit = d == 0.0
    d = np.where(hit, 1.0, d)
    num = w[None, :] / d
    row = num / np.sum(num, axis=1, keepdims=True)
    exact = hit.any(axis=1)
    if np.any(exact):
        row[exact] = hit[exact].astype(float)
    return row


def lagrange_eval_1d(points, values, y) -> float:
    """Value at y of the polynomial interpolating (points, values)."""
    pts = _check_points(points)
    vals = np.asarray(values, dtype=float)
    if vals.shape != pts.shape:
        raise ValueError("points and values must have the same length")
    return float((lagrange_basis_row(pts, [y]) @ vals)[0])


def quad_weights_1d(points) -> np.ndarray:
    """Weights w_k = int_0^1 L_k(y) dy for the Lagrange basis on the points.

    Solved through the Chebyshev basis: with V[i, j] = T_j(2 y_i - 1), the
    weights satisfy V^T w = t where t_j = int_0^1 T_j(2y - 1) dy, which is
    0 for odd j and 1 / (1 - j^2) for even j.
    """
    pts = _check_points(points)
    key = tuple(pts.tolist())
    with _cache_lock:
        w = _quad_cache.get(key)
    if w is not None:
        return w
    m = pts.size
    V = _cheb.chebvander(2.0 * pts - 1.0, m - 1)
    j = np.arange(m)
    t = np.zeros(m)
    even = j % 2 == 0
    t[even] = 1.0 / (1.0 - j[even].astype(float) ** 2)
    w = np.linalg.solve(V.T, t)
    with _cache_lock:
        _quad_cache[key] = w
    return w


class TensorGrid:
    """Tensor product of per-dimension knot vectors, row-major point order."""

    def __init__(self, dim_points):
        self.dim_points = tuple(_check_points(p) for p in dim_points)
        self.shape = tuple(p.size for p in self.dim_points)
        self.n_dims = len(self.dim_points)
        self.n_points = int(np.prod(self.shape))
        self._flat = None

    def points(self) -> np.ndarray:
        """All grid points, shape (n_points, n_dims), row-major."""
        if self._flat is None:
            mesh = np.meshgrid(*self.dim_points, indexing="ij")
            self._flat = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        return self._flat

    def quad_weights(self) -> np.ndarray:
        """Tensorised quadrature weights, flattened row-major."""
        w = quad_weights_1d(self.dim_points[0])
        for p in self.dim_points[1:]:
            w = np.multiply.outer(w, quad_weights_1d(p))
        return w.reshape(-1)

    def basis_matrix(self, Y) -> np.ndarray:
        """Tensor Lagrange basis at points Y (N, n_dims): shape (N, n_points)."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.n_dims:
            raise ValueError(f"points have {Y.shape[1]} dims, grid has {self.n_dims}")
        B = lagrange_basis_row(self.dim_points[0], Y[:, 0])
        for d in range(1, self.n_dims):
            Bd = lagrange_basis_row(self.dim_points[d], Y[:, d])
            B = (B[:, :, None] * Bd[:, None, :]).reshape(Y.shape[0], -1)
        return B


def tensor_interp_eval(grid: TensorGrid, values, y) -> float:
    """Evaluate the tensor-product interpolant of row-major values at point y."""
    vals = np.asarray(values, dtype=float).reshape(-1)
    if vals.size != grid.n_points:
        raise ValueError(f"expected {grid.n_points} values, got {vals.size}")
    return float((grid.basis_matrix([y]) @ vals)[0])
