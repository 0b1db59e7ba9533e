"""Multi-index sets: admissibility, margins, restriction and backfilling.

Multi-indices are tuples of integers >= 1.  A set is admissible (downward
closed) when every member keeps all of its backward neighbours inside the
set.  Joint indices concatenate a fidelity part of length ``n_model`` with
a parameter part; ``n_model = 0`` is allowed and denotes parameter-only
sets.
"""

from __future__ import annotations

from typing import Iterable

__all__ = [
    "is_admissible",
    "require_admissible",
    "reduced_margin",
    "margin",
    "modified_reduced_margin",
    "backfill_set",
    "restrict",
    "active_fidelities",
    "sorted_indices",
    "miset_to_csv",
]

MultiIndex = tuple[int, ...]


def _as_set(indices: Iterable[MultiIndex]) -> frozenset[MultiIndex]:
    s = frozenset(tuple(int(e) for e in idx) for idx in indices)
    if not s:
        raise ValueError("multi-index set must be non-empty")
    lengths = {len(idx) for idx in s}
    if len(lengths) != 1:
        raise ValueError(f"multi-index set has mixed lengths {sorted(lengths)}")
    if any(e < 1 for idx in s for e in idx):
        raise ValueError("multi-index entries must be >= 1")
    return s


def _backward_neighbours(idx: MultiIndex):
    for i, e in enumerate(idx):
        if e > 1:
            yield idx[:i] + (e - 1,) + idx[i + 1 :]


def _forward_neighbours(idx: MultiIndex):
    for i in range(len(idx)):
        yield idx[:i] + (idx[i] + 1,) + idx[i + 1 :]


def is_admissible(indices: Iterable[MultiIndex]) -> bool:
    """True iff the set is downward closed."""
    s = _as_set(indices)
    return all(nb in s for idx in s for nb in _backward_neighbours(idx))


def require_admissible(indices: Iterable[MultiIndex]) -> frozenset[MultiIndex]:
    s = _as_set(indices)
    for idx in s:
        for nb in _backward_neighbours(idx):
            if nb not in s:
                raise ValueError(f"set is not admissible: {idx} lacks backward neighbour {nb}")
    return s


def margin(indices: Iterable[MultiIndex]) -> frozenset[MultiIndex]:
    """All forward neighbours of members that are not themselves members."""
    s = require_admissible(indices)
    out = set()
    for idx in s:
        for nb in _forward_neighbours(idx):
            if nb not in s:
                out.add(nb)
    return frozenset(out)


def reduced_margin(indices: Iterable[MultiIndex]) -> frozenset[MultiIndex]:
    """Margin members whose every backward neighbour lies in the set."""
    s = require_admissible(indices)
    return frozenset(
        mu for mu in margin(s) if all(nb in s for nb in _backward_neighbours(mu))
    )


def modified_reduced_margin(
    indices: Iterable[MultiIndex],
    saturated: Iterable[MultiIndex],
    n_model: int,
) -> frozenset[MultiIndex]:
    """Margin members admissible up to backward neighbours at saturated fidelities.

    A backward neighbour may be missing from the set provided its fidelity
    part (the first ``n_model`` entries) belongs to ``saturated``.
    """
    s = require_admissible(indices)
    sat = frozenset(tuple(a) for a in saturated)
    out = set()
    for mu in margin(s):
        ok = True
        for nb in _backward_neighbours(mu):
            if nb not in s and nb[:n_model] not in sat:
                ok = False
                break
        if ok:
            out.add(mu)
    return frozenset(out)


def backfill_set(indices: Iterable[MultiIndex], mu: MultiIndex) -> frozenset[MultiIndex]:
    """Minimal indices that restore admissibility of the set plus ``mu``.

    Computed as the closure of missing backward neighbours of ``mu``;
    disjoint from the set and excluding ``mu`` itself.
    """
    s = require_admissible(indices)
    mu = tuple(int(e) for e in mu)
    if mu in s:
        raise ValueError(f"{mu} is already a member of the set")
    missing: set[MultiIndex] = set()
    stack = [mu]
    while stack:
        idx = stack.pop()
        for nb in _backward_neighbours(idx):
            if nb not in s and nb != mu and nb not in missing:
                missing.add(nb)
                stack.append(nb)
    return frozenset(missing)


def restrict(indices: Iterable[MultiIndex], alpha: MultiIndex) -> frozenset[MultiIndex]:
    """Parameter parts of members whose fidelity part equals ``alpha``."""
    s = require_admissible(indices)
    alpha = tuple(int(a) for a in alpha)
    k = len(alpha)
    return frozenset(idx[k:] for idx in s if idx[:k] == alpha)


def active_fidelities(indices: Iterable[MultiIndex], n_model: int) -> frozenset[MultiIndex]:
    """Distinct fidelity parts appearing in the set."""
    s = require_admissible(indices)
    return frozenset(idx[:n_model] for idx in s)


def sorted_indices(indices: Iterable[MultiIndex]) -> list[MultiIndex]:
    """Deterministic (lexicographic) iteration order."""
    return sorted(indices)


def miset_to_csv(path, indices, coeffs=None) -> None:
    """Write a multi-index set as CSV, one row per index, optional coeff column."""
    idxs = sorted_indices(indices)
    n = len(idxs[0]) if idxs else 0
    with open(path, "w", newline="\n") as f:
        cols = [f"i{d + 1}" for d in range(n)]
        if coeffs is not None:
            cols.append("coeff")
        f.write(",".join(cols) + "\n")
        for idx in idxs:
            row = [str(e) for e in idx]
            if coeffs is not None:
                row.append(str(int(coeffs.get(idx, 0))))
            f.write(",".join(row) + "\n")
