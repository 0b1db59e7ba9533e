"""Greedy adaptive loops: profit-driven refinement with optional plateau blocking.

Both loops grow an admissible joint (fidelity x parameter) multi-index set
from the root, scoring candidates by error-indicator-per-unit-work.  The
noise-robust variant additionally converts each active fidelity's
restriction to spectral form every iteration, marks fidelities whose
envelope has flattened as saturated, zeroes the profits of refinements
that only add polynomial degrees past the change point, and explores a
modified reduced margin whose missing neighbours are backfilled on commit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import midx
from .combiner import GridKit, Surrogate, build_surrogate
from .models import EvalCache, ModelHierarchy
from .plateau import PlateauParams, PlateauReport, detect_plateau
from .spectral import envelope, poly_degree_set, to_spectral

__all__ = [
    "AdaptConfig",
    "IterationRecord",
    "Snapshot",
    "RunResult",
    "error_indicator",
    "work_indicator",
    "filter_profits",
    "run_misc",
    "run_plateau_misc",
    "build_reference",
]


@dataclass(frozen=True)
class AdaptConfig:
    family: str = "symmetric_leja"
    rule: str = "two_step"
    max_cost: float = math.inf
    max_iterations: float = math.inf
    min_profit: float = 0.0
    plateau: PlateauParams = field(default_factory=PlateauParams)
    snapshot_costs: tuple = ()

    def __post_init__(self):
        finite = (
            math.isfinite(self.max_cost)
            or math.isfinite(self.max_iterations)
            or self.min_profit > 0.0
        )
        if not finite:
            raise ValueError("at least one stopping criterion must be finite")


@dataclass
class IterationRecord:
    iteration: int
    selected: tuple
    backfill: tuple
    error: float
    work: float
    profit: float
    cumulative_cost: float
    eval_counts: dict
    set_counts: dict
    saturated: frozenset


@dataclass
class Snapshot:
    threshold: float
    iteration: int
    indices: frozenset
    cumulative_cost: float


@dataclass
class RunResult:
    surrogate: Surrogate
    history: list
    snapshots: list
    plateau_log: dict
    status: str
    indices: frozenset
    saturated: frozenset
    change_points: dict


class _Session:
    """Shared evaluation machinery for one adaptive run."""

    def __init__(self, hierarchy: ModelHierarchy, config: AdaptConfig, cache=None):
        self.hierarchy = hierarchy
        self.config = config
        self.kit = GridKit(config.family, config.rule)
        self.cache = cache if cache is not None else EvalCache(hierarchy)
        self.n_model = hierarchy.n_model
        self._term_integrals: dict = {}
        self._delta_integrals: dict = {}

    # -- term machinery -------------------------------------------------
    def _term_integral(self, gamma) -> float:
        """Integral of the tensor interpolant of one (fidelity, level) term."""
        val = self._term_integrals.get(gamma)
        if val is None:
            alpha, beta = gamma[: self.n_model], gamma[self.n_model :]
            grid = self.kit.grid(beta)
            table = np.array(
                [self.cache.get_or_eval(alpha, tuple(p.tolist()))[0] for p in grid.points()]
            )
            val = float(grid.quad_weights() @ table)
            self._term_integrals[gamma] = val
        return val

    def delta_expectation(self, gamma) -> float:
        """Expectation of the hierarchical surplus of ``gamma``.

        Mixed first difference of term integrals over the backward unit
        cube; adding ``gamma`` to a downward-closed set changes the
        surrogate's expectation by exactly this amount.
        """
        val = self._delta_integrals.get(gamma)
        if val is None:
            n = len(gamma)
            val = 0.0
            for bits in range(1 << n):
                shifted = []
                sign = 1
                ok = True
                for i in range(n):
                    if bits >> i & 1:
                        if gamma[i] == 1:
                            ok = False
                            break
                        shifted.append(gamma[i] - 1)
                        sign = -sign
                    else:
                        shifted.append(gamma[i])
                if ok:
                    val += sign * self._term_integral(tuple(shifted))
            self._delta_integrals[gamma] = val
        return val

    def surrogate(self, indices) -> Surrogate:
        fixed = () if self.n_model == 0 else None
        return build_surrogate(
            indices, self.n_model, self.kit, self.cache.evaluator(), fixed_alpha=fixed
        )

    def restricted_surrogate(self, indices, alpha) -> Surrogate:
        """Single-fidelity interpolant over the restriction to ``alpha``."""
        k = self.n_model
        pset = {idx[k:] for idx in indices if idx[:k] == alpha}
        return build_surrogate(pset, 0, self.kit, self.cache.evaluator(), fixed_alpha=alpha)

    # -- indicators ------------------------------------------------------
    def error_indicator(self, mu, backfill) -> float:
        total = self.delta_expectation(mu)
        for nu in backfill:
            total += self.delta_expectation(nu)
        return abs(total)

    def work_indicator(self, mu, backfill) -> float:
        def one(gamma):
            alpha, beta = gamma[: self.n_model], gamma[self.n_model :]
            new_pts = int(np.prod([self.kit.new_points_1d(b) for b in beta]))
            return self.hierarchy.cost(alpha) * new_pts

        return one(mu) + sum(one(nu) for nu in backfill)

    def set_counts(self, indices) -> dict:
        """Collocation-point count of each fidelity's restriction."""
        k = self.n_model
        byfid: dict = {}
        for idx in indices:
            byfid.setdefault(idx[:k], set()).add(idx[k:])
        return {
            alpha: self.kit.n_colloc(byfid[alpha]) for alpha in sorted(byfid)
        }

    def within_levels(self, gamma) -> bool:
        levels = self.hierarchy.max_levels()
        if levels is None or self.n_model == 0:
            return True
        return all(g <= l for g, l in zip(gamma[: self.n_model], levels))


def error_indicator(
    hierarchy, config, indices, mu, backfill=(), cache=None
) -> float:
    """Absolute change of the surrogate's expectation when adding mu and its backfill."""
    sess = _Session(hierarchy, config, cache)
    midx.require_admissible(set(indices) | set(backfill) | {tuple(mu)})
    return sess.error_indicator(tuple(mu), tuple(backfill))


def work_indicator(hierarchy, config, indices, mu, backfill=(), cache=None) -> float:
    """Modelled cost of adding mu and its backfill: new points times solve cost."""
    sess = _Session(hierarchy, config, cache)
    return sess.work_indicator(tuple(mu), tuple(backfill))


def filter_profits(profits, indices, saturated, change_points, kit, n_model) -> dict:
    """Zero the profits of saturated-fidelity candidates that only add
    polynomial degrees at or beyond the fidelity's change point."""
    out = dict(profits)
    if not saturated:
        return out
    degree_cache: dict = {}
    for mu in profits:
        alpha, beta = mu[:n_model], mu[n_model:]
        if alpha not in saturated:
            continue
        kappa = change_points[alpha]
        if alpha not in degree_cache:
            degree_cache[alpha] = set(poly_degree_set(midx.restrict(indices, alpha), kit))
        old = degree_cache[alpha]
        new_box = set()
        stack = [()]
        for b in beta:
            stack = [t + (d,) for t in stack for d in range(kit.m(b))]
        new_box.update(stack)
        added = new_box - old
        if added and all(sum(p) >= kappa for p in added):
            out[mu] = 0.0
    return out


def _backfill_fast(indices, mu):
    """Backfill closure assuming ``indices`` is already admissible."""
    missing = []
    seen = set()
    stack = [mu]
    while stack:
        idx = stack.pop()
        for i, e in enumerate(idx):
            if e > 1:
                nb = idx[:i] + (e - 1,) + idx[i + 1 :]
                if nb not in indices and nb != mu and nb not in seen:
                    seen.add(nb)
                    missing.append(nb)
                    stack.append(nb)
    return missing


def _candidate_scores(sess, indices, candidates, max_cost):
    """E, W, profit and backfill for each candidate, evaluating as needed.

    Scoring stops early once the budget is exhausted; the partial pass is
    discarded by the caller.
    """
    scores = {}
    for mu in sorted(candidates):
        if sess.cache.total_cost >= max_cost:
            return None
        b = _backfill_fast(indices, mu)
        e = sess.error_indicator(mu, b)
        w = sess.work_indicator(mu, b)
        scores[mu] = (e, w, e / w, tuple(sorted(b)))
    return scores


def _emit_snapshots(snapshots, pending, cost, iteration, indices):
    while pending and cost >= pending[0]:
        snapshots.append(
            Snapshot(
                threshold=pending.pop(0),
                iteration=iteration,
                indices=frozenset(indices),
                cumulative_cost=cost,
            )
        )


def _run(hierarchy, config, cache, use_plateau):
    sess = _Session(hierarchy, config, cache)
    n = hierarchy.n_model + hierarchy.n_y
    indices = {(1,) * n}
    saturated: set = set()
    change_points: dict = {}
    plateau_log: dict = {}
    history: list = []
    snapshots: list = []
    pending = sorted(config.snapshot_costs)
    status = "running"
    iteration = 0
    # union of the committed set with the last scored margin; every term in
    # it has been evaluated, so the returned enlargement is free
    last_union = frozenset(indices)
    # root evaluation is part of every run
    sess._term_integral((1,) * n)

    while True:
        if sess.cache.total_cost >= config.max_cost:
            status = "budget"
            break
        if iteration >= config.max_iterations:
            status = "iterations"
            break

        if use_plateau:
            candidates = midx.modified_reduced_margin(indices, saturated, sess.n_model)
        else:
            candidates = midx.reduced_margin(indices)
        candidates = {mu for mu in candidates if sess.within_levels(mu)}
        if not candidates:
            status = "exhausted"
            break

        scores = _candidate_scores(sess, indices, candidates, config.max_cost)
        if scores is None:
            status = "budget"
            break
        profits = {mu: s[2] for mu, s in scores.items()}
        last_union = frozenset(indices) | candidates

        if use_plateau:
            active = midx.active_fidelities(indices, sess.n_model)
            for alpha in sorted(active - saturated):
                restricted = sess.restricted_surrogate(indices, alpha)
                report = detect_plateau(envelope(to_spectral(restricted)), config.plateau)
                plateau_log.setdefault(alpha, []).append((iteration, report))
                if report.is_plateau:
                    saturated.add(alpha)
                    change_points[alpha] = report.change_point
            profits = filter_profits(
                profits, indices, saturated, change_points, sess.kit, sess.n_model
            )

        max_unfiltered = max(scores[mu][2] for mu in scores)
        if max_unfiltered <= config.min_profit:
            status = "profit"
            break
        live = [mu for mu, p in profits.items() if p > 0.0]
        if not live:
            status = "saturated"
            break
        best = min(live, key=lambda mu: (-profits[mu], mu))
        e, w, _, backfill = scores[best]

        indices.add(best)
        indices.update(backfill)
        # refinement must not break downward closure; checking the added
        # indices' backward neighbours is equivalent to a full re-check
        for gamma in (best, *backfill):
            for i, e in enumerate(gamma):
                if e > 1:
                    assert gamma[:i] + (e - 1,) + gamma[i + 1 :] in indices
        # populate tables for any new non-zero terms so cost is charged now
        for gamma in (best, *backfill):
            sess._term_integral(gamma)

        iteration += 1
        cost = sess.cache.total_cost
        history.append(
            IterationRecord(
                iteration=iteration,
                selected=best,
                backfill=backfill,
                error=e,
                work=w,
                profit=profits[best],
                cumulative_cost=cost,
                eval_counts=sess.cache.counts_by_fidelity(),
                set_counts=sess.set_counts(indices),
                saturated=frozenset(saturated),
            )
        )
        snap_set = frozenset(indices) if use_plateau else (frozenset(indices) | last_union)
        _emit_snapshots(snapshots, pending, cost, iteration, snap_set)

    if use_plateau:
        final_set = frozenset(indices)
    else:
        final_set = frozenset(indices) | last_union
    if pending and sess.cache.total_cost >= pending[0]:
        _emit_snapshots(snapshots, pending, sess.cache.total_cost, iteration, final_set)
    surrogate = sess.surrogate(final_set)
    return RunResult(
        surrogate=surrogate,
        history=history,
        snapshots=snapshots,
        plateau_log=plateau_log,
        status=status,
        indices=frozenset(final_set),
        saturated=frozenset(saturated),
        change_points=dict(change_points),
    )


def run_misc(hierarchy, config: AdaptConfig, cache=None) -> RunResult:
    """Greedy multi-index collocation; returns the surrogate over the final
    set together with its reduced margin (already evaluated for the
    indicators, so free)."""
    return _run(hierarchy, config, cache, use_plateau=False)


def run_plateau_misc(hierarchy, config: AdaptConfig, cache=None) -> RunResult:
    """Noise-robust variant: plateau detection, saturation, profit
    filtering and backfilled refinement; returns the surrogate over the
    committed set only."""
    return _run(hierarchy, config, cache, use_plateau=True)


def build_reference(hierarchy, w: int, alpha_ref, cache=None) -> Surrogate:
    """Isotropic single-fidelity surrogate at a reference fidelity.

    Clenshaw-Curtis points under the doubling rule on the total-degree set
    |beta|_1 <= n_y + w.
    """
    kit = GridKit("clenshaw_curtis", "doubling")
    n_y = hierarchy.n_y
    cache = cache if cache is not None else EvalCache(hierarchy)
    levels = range(1, n_y + w + 1)
    pset = set()
    stack = [()]
    for _ in range(n_y):
        stack = [t + (b,) for t in stack for b in levels]
    for beta in stack:
        if sum(beta) <= n_y + w:
            pset.add(beta)
    alpha_ref = tuple(alpha_ref)
    return build_surrogate(
        pset,
        0,
        kit,
        lambda a, y: cache.get_or_eval(alpha_ref, y)[0],
        fixed_alpha=alpha_ref,
    )
