"""One-dimensional collocation point families and level-to-knots rules.

All point sets live on [0, 1] and are returned sorted and duplicate-free.
Clenshaw-Curtis points are nested under the doubling rule; the symmetric
Leja sequence is nested under every rule because it is a single sequence
of which each rule takes a prefix.
"""

from __future__ import annotations

import threading
from enum import Enum

import numpy as np

__all__ = [
    "KnotFamily",
    "LevelToKnots",
    "level_to_knots",
    "knots_1d",
    "is_nested",
]


class KnotFamily(Enum):
    CLENSHAW_CURTIS = "clenshaw_curtis"
    SYMMETRIC_LEJA = "symmetric_leja"


class LevelToKnots(Enum):
    LINEAR = "linear"
    TWO_STEP = "two_step"
    DOUBLING = "doubling"


def _coerce(value, enum_cls):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        names = ", ".join(e.value for e in enum_cls)
        raise ValueError(f"unknown {enum_cls.__name__} {value!r}; expected one of: {names}")


def level_to_knots(rule, level: int) -> int:
    """Number of 1D points m(level) for a level-to-knots rule; m(1) = 1 always."""
    rule = _coerce(rule, LevelToKnots)
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    if level == 1:
        return 1
    if rule is LevelToKnots.LINEAR:
        return level
    if rule is LevelToKnots.TWO_STEP:
        return 2 * (level - 1) + 1
    return 2 ** (level - 1) + 1


# Leja table construction: on [-1, 1], start 0, 1, -1, then repeatedly take the
# argmax of prod |x - x_j| over a fixed Chebyshev-distributed candidate grid and
# append the point together with its mirror image.  The positive point of each
# pair is emitted first.  Working in log space keeps the products finite.
_LEJA_STARTUP = 65
_LEJA_CANDIDATES = 100001

_leja_lock = threading.Lock()
_leja_seq: list | None = None  # on [-1, 1], sequence order
_leja_cand: np.ndarray | None = None  # candidate grid
_leja_logprod: np.ndarray | None = None  # running objective on the candidates


def _extend_leja(n: int) -> np.ndarray:
    global _leja_seq, _leja_cand, _leja_logprod
    with _leja_lock:
        if _leja_seq is None:
            _leja_seq = [0.0, 1.0, -1.0]
            _leja_cand = np.cos(np.pi * np.arange(_LEJA_CANDIDATES) / (_LEJA_CANDIDATES - 1))
            with np.errstate(divide="ignore"):
                _leja_logprod = sum(np.log(np.abs(_leja_cand - x)) for x in _leja_seq)
        target = max(n, _LEJA_STARTUP)
        while len(_leja_seq) < target:
            x = abs(float(_leja_cand[np.argmax(_leja_logprod)]))
            for p in (x, -x):
                _leja_seq.append(p)
                with np.errstate(divide="ignore"):
                    _leja_logprod += np.log(np.abs(_leja_cand - p))
        return np.array(_leja_seq)


def knots_1d(family, m: int) -> np.ndarray:
    """First m collocation points of a family, sorted, on [0, 1]."""
    family = _coerce(family, KnotFamily)
    if m < 1:
        raise ValueError(f"point count must be >= 1, got {m}")
    if family is KnotFamily.CLENSHAW_CURTIS:
        if m == 1:
            return np.array([0.5])
        # build the lower half from the cosine formula and mirror the rest so
        # the set is exactly symmetric with an exact 0.5 midpoint; this keeps
        # doubling-rule nesting bit-level exact
        pts = np.empty(m)
        half = (m - 1) // 2
        j = np.arange(half + 1)
        pts[: half + 1] = (1.0 - np.cos(np.pi * j / (m - 1))) / 2.0
        pts[m - 1 - half :] = 1.0 - pts[: half + 1][::-1]
        if m % 2 == 1:
            pts[half] = 0.5
        return pts
    seq = _extend_leja(m)
    pts = np.sort((1.0 + seq[:m]) / 2.0)
    return pts


def is_nested(family, rule, up_to_level: int, tol: float = 1e-14) -> bool:
    """True iff knots at level l are contained in those at level l+1 for all l < up_to_level."""
    if up_to_level < 2:
        raise ValueError(f"up_to_level must be >= 2, got {up_to_level}")
    family = _coerce(family, KnotFamily)
    rule = _coerce(rule, LevelToKnots)
    for lvl in range(1, up_to_level):
        small = knots_1d(family, level_to_knots(rule, lvl))
        big = knots_1d(family, level_to_knots(rule, lvl + 1))
        # nearest-neighbour distance per point against the finer set
        dist = np.min(np.abs(small[:, None] - big[None, :]), axis=1)
        if np.any(dist > tol):
            return False
    return True
