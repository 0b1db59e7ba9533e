"""Combination-technique assembly of sparse-grid surrogates.

A surrogate is a signed linear combination of tensor-product interpolants,
one per multi-index with non-zero combination coefficient.  Joint indices
carry a fidelity prefix of length ``n_model`` (0 for single-fidelity
surrogates built at a fixed fidelity).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import midx
from .knots import KnotFamily, LevelToKnots, knots_1d, level_to_knots
from .tensor import TensorGrid

__all__ = [
    "GridKit",
    "Surrogate",
    "combination_coeffs",
    "collocation_requests",
    "build_surrogate",
    "surface_to_csv",
]


class GridKit:
    """Knot family + level-to-knots rule with per-level grid caches."""

    def __init__(self, family, rule):
        self.family = KnotFamily(family) if not isinstance(family, KnotFamily) else family
        self.rule = LevelToKnots(rule) if not isinstance(rule, LevelToKnots) else rule
        self._knots: dict[int, np.ndarray] = {}
        self._grids: dict[tuple[int, ...], TensorGrid] = {}

    def m(self, level: int) -> int:
        return level_to_knots(self.rule, level)

    def new_points_1d(self, level: int) -> int:
        """m(level) - m(level - 1); the hierarchical 1D point increment."""
        if level == 1:
            return 1
        return self.m(level) - self.m(level - 1)

    def knots(self, level: int) -> np.ndarray:
        pts = self._knots.get(level)
        if pts is None:
            pts = knots_1d(self.family, self.m(level))
            self._knots[level] = pts
        return pts

    def grid(self, beta: tuple[int, ...]) -> TensorGrid:
        g = self._grids.get(beta)
        if g is None:
            g = TensorGrid([self.knots(b) for b in beta])
            self._grids[beta] = g
        return g

    def n_colloc(self, param_set) -> int:
        """Distinct collocation points of a downward-closed parameter set.

        With nested knots each index contributes the product of its
        per-dimension point increments exactly once.
        """
        return sum(
            int(np.prod([self.new_points_1d(b) for b in beta])) for beta in param_set
        )


def combination_coeffs(indices) -> dict[tuple[int, ...], int]:
    """Combination coefficients c = sum over the forward unit cube of (-1)^|j|."""
    s = midx.require_admissible(indices)
    n = len(next(iter(s)))
    coeffs = {}
    for gamma in s:
        c = 0
        for j in itertools.product((0, 1), repeat=n):
            shifted = tuple(g + d for g, d in zip(gamma, j))
            if shifted in s:
                c += -1 if sum(j) % 2 else 1
        coeffs[gamma] = c
    return coeffs


def collocation_requests(indices, n_model: int, kit: GridKit) -> dict:
    """Map each active fidelity to the distinct points its non-zero terms need."""
    s = midx.require_admissible(indices)
    coeffs = combination_coeffs(s)
    out: dict[tuple[int, ...], set] = {}
    for gamma in midx.sorted_indices(s):
        if coeffs[gamma] == 0:
            continue
        alpha, beta = gamma[:n_model], gamma[n_model:]
        pts = out.setdefault(alpha, set())
        for p in kit.grid(beta).points():
            pts.add(tuple(p.tolist()))
    return out


@dataclass
class Surrogate:
    """A combination-technique surrogate with cached evaluation tables.

    ``tables`` holds, for every index with non-zero coefficient, the model
    values on that index's tensor grid in row-major order.
    """

    indices: frozenset
    n_model: int
    n_y: int
    kit: GridKit
    coeffs: dict = field(repr=False)
    tables: dict = field(repr=False)
    fixed_alpha: tuple | None = None

    def _active_terms(self):
        for gamma in midx.sorted_indices(self.indices):
            c = self.coeffs.get(gamma, 0)
            if c != 0:
                yield gamma, c

    def evaluate_many(self, Y) -> np.ndarray:
        """Evaluate at points Y of shape (N, n_y)."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.n_y:
            raise ValueError(f"points have {Y.shape[1]} dims, surrogate has {self.n_y}")
        out = np.zeros(Y.shape[0])
        for gamma, c in self._active_terms():
            table = self.tables.get(gamma)
            if table is None:
                raise RuntimeError(f"missing evaluation table for term {gamma}")
            grid = self.kit.grid(gamma[self.n_model :])
            out += c * (grid.basis_matrix(Y) @ table)
        return out

    def evaluate(self, y) -> float:
        return float(self.evaluate_many([tuple(y)])[0])

    def __call__(self, y) -> float:
        return self.evaluate(y)

    def expectation(self) -> float:
        """Exact integral of the surrogate against the uniform density."""
        total = 0.0
        for gamma, c in self._active_terms():
            table = self.tables.get(gamma)
            if table is None:
                raise RuntimeError(f"missing evaluation table for term {gamma}")
            grid = self.kit.grid(gamma[self.n_model :])
            total += c * float(grid.quad_weights() @ table)
        return total


def build_surrogate(indices, n_model, kit, evaluator, fixed_alpha=None) -> Surrogate:
    """Assemble a surrogate over an admissible set.

    ``evaluator(alpha, point_tuple) -> float`` supplies model values; for
    parameter-only sets pass ``n_model = 0`` and a ``fixed_alpha`` used for
    every term.
    """
    s = midx.require_admissible(indices)
    n = len(next(iter(s)))
    n_y = n - n_model
    coeffs = combination_coeffs(s)
    tables = {}
    for gamma in midx.sorted_indices(s):
        if coeffs[gamma] == 0:
            continue
        alpha = fixed_alpha if n_model == 0 else gamma[:n_model]
        grid = kit.grid(gamma[n_model:])
        vals = np.array([evaluator(alpha, tuple(p.tolist())) for p in grid.points()])
        tables[gamma] = vals
    return Surrogate(
        indices=s,
        n_model=n_model,
        n_y=n_y,
        kit=kit,
        coeffs=coeffs,
        tables=tables,
        fixed_alpha=fixed_alpha,
    )


def surface_to_csv(path, surrogate: Surrogate, grid_size: int = 101) -> None:
    """Sample a 2D surrogate on a regular grid and write y1, y2, value rows."""
    if surrogate.n_y != 2:
        raise ValueError("surface export requires a two-parameter surrogate")
    g = np.linspace(0.0, 1.0, grid_size)
    Y = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    vals = surrogate.evaluate_many(Y)
    with open(path, "w", newline="\n") as f:
        f.write("y1,y2,value\n")
        for (y1, y2), v in zip(Y, vals):
            f.write(f"{y1:.17g},{y2:.17g},{v:.17g}\n")
