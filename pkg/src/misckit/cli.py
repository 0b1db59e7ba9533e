"""Experiment orchestration: config parsing, runs, snapshot metrics, CSV outputs.

A run is described by a TOML file; see ``demos/configs/`` for worked
examples and the README for the schema.  Outputs are plain CSV (LF line endings, 17 significant
digits) so downstream plotting needs no knowledge of this package.

Exit codes: 0 success, 2 invalid config or missing inputs, 3 evaluation
failure (partial outputs are flushed).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import midx
from .adaptive import AdaptConfig, build_reference, run_misc, run_plateau_misc, _Session
from .combiner import GridKit, build_surrogate, surface_to_csv
from .metrics import MetricConfig, h1_error_mc, kde_pdf, ks2, l2_error_mc, uniform_stream
from .models import EvalCache, Genz2dgpNoisy, Parabolic1dNoisy, SingleFidelityView
from .plateau import PlateauParams, detect_plateau
from .spectral import envelope, to_spectral

OUTPUT_ROOT_ENV = "MISCKIT_OUTPUT_ROOT"

PROBLEMS = ("genz2dgp", "parabolic1d")
ALGORITHMS = ("misc", "plateau_misc", "reference_sc", "adaptive_sc_single_fidelity")


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "genz2dgp"
    problem_seed: int = 0
    max_fidelity: int = 8
    algorithm: str = "plateau_misc"
    family: str = "symmetric_leja"
    rule: str = "two_step"
    algorithm_w: int = 2
    algorithm_alpha: int = 1
    max_cost: float = math.inf
    max_iterations: float = math.inf
    min_profit: float = 0.0
    plateau: PlateauParams = field(default_factory=PlateauParams)
    n_mc: int = 10_000
    n_mc_ks: int = 1_000_000
    metric_seed: int = 0
    fd_step: float = 1e-4
    reference_w: int = 8
    reference_alpha: int = 8
    snapshot_costs: tuple = ()
    output_directory: str = "out"
    surface_grid: int = 101
    pdf_grid_size: int = 256


_SCHEMA = {
    "problem": {"kind": str, "seed": int, "max_fidelity": int},
    "algorithm": {"kind": str, "family": str, "rule": str, "w": int, "alpha": int},
    "stopping": {"max_cost": float, "max_iterations": float, "min_profit": float},
    "plateau": {"burn_in": int, "burn_out": int, "k_min": int, "slope_threshold": float},
    "metrics": {"n_mc": int, "n_mc_ks": int, "seed": int, "fd_step": float},
    "reference": {"w": int, "alpha": int},
    "snapshots": {"costs": list},
    "output": {"directory": str, "surface_grid": int, "pdf_grid_size": int},
}


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")

    for section, table in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"{path}: [{section}] must be a table")
        for key in table:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")

    cfg = ExperimentConfig()

    def take(section, key, default, caster=None):
        val = raw.get(section, {}).get(key, default)
        if caster is not None and val is not None:
            try:
                val = caster(val)
            except (TypeError, ValueError):
                raise ConfigError(f"{path}: invalid value for {section}.{key}: {val!r}")
        return val

    cfg.problem = take("problem", "kind", cfg.problem)
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"{path}: problem.kind must be one of {PROBLEMS}")
    cfg.problem_seed = take("problem", "seed", cfg.problem_seed, int)
    cfg.max_fidelity = take("problem", "max_fidelity", cfg.max_fidelity, int)
    cfg.algorithm = take("algorithm", "kind", cfg.algorithm)
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"{path}: algorithm.kind must be one of {ALGORITHMS}")
    cfg.family = take("algorithm", "family", cfg.family)
    cfg.rule = take("algorithm", "rule", cfg.rule)
    cfg.algorithm_w = take("algorithm", "w", cfg.algorithm_w, int)
    cfg.algorithm_alpha = take("algorithm", "alpha", cfg.algorithm_alpha, int)
    cfg.max_cost = take("stopping", "max_cost", cfg.max_cost, float)
    cfg.max_iterations = take("stopping", "max_iterations", cfg.max_iterations, float)
    cfg.min_profit = take("stopping", "min_profit", cfg.min_profit, float)
    cfg.plateau = PlateauParams(
        burn_in=take("plateau", "burn_in", 2, int),
        burn_out=take("plateau", "burn_out", 2, int),
        k_min=take("plateau", "k_min", 3, int),
        slope_threshold=take("plateau", "slope_threshold", 0.1, float),
    )
    cfg.n_mc = take("metrics", "n_mc", cfg.n_mc, int)
    cfg.n_mc_ks = take("metrics", "n_mc_ks", cfg.n_mc_ks, int)
    cfg.metric_seed = take("metrics", "seed", cfg.metric_seed, int)
    cfg.fd_step = take("metrics", "fd_step", cfg.fd_step, float)
    cfg.reference_w = take("reference", "w", cfg.reference_w, int)
    cfg.reference_alpha = take("reference", "alpha", cfg.reference_alpha, int)
    costs = take("snapshots", "costs", [])
    try:
        cfg.snapshot_costs = tuple(sorted(float(c) for c in costs))
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: snapshots.costs must be a list of numbers")
    cfg.output_directory = take("output", "directory", cfg.output_directory)
    cfg.surface_grid = take("output", "surface_grid", cfg.surface_grid, int)
    cfg.pdf_grid_size = take("output", "pdf_grid_size", cfg.pdf_grid_size, int)

    if cfg.problem == "parabolic1d":
        limit = Parabolic1dNoisy.MAX_LEVEL
        if cfg.reference_alpha > limit or cfg.algorithm_alpha > limit:
            raise ConfigError(
                f"{path}: parabolic1d fidelity levels are limited to {limit}"
            )

    if cfg.algorithm in ("misc", "plateau_misc", "adaptive_sc_single_fidelity"):
        ok = (
            math.isfinite(cfg.max_cost)
            or math.isfinite(cfg.max_iterations)
            or cfg.min_profit > 0.0
        )
        if not ok:
            raise ConfigError(f"{path}: at least one stopping criterion must be set")
    return cfg


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows, preamble=()) -> None:
    with open(path, "w", newline="\n") as f:
        for line in preamble:
            f.write(f"# {line}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _idx_str(idx) -> str:
    return "-".join(str(e) for e in idx)


def _idx_list_str(indices) -> str:
    return ";".join(_idx_str(i) for i in sorted(indices))


def _fid_label(alpha) -> str:
    return _idx_str(alpha) if alpha else "ref"


def make_hierarchy(cfg: ExperimentConfig):
    if cfg.problem == "genz2dgp":
        return Genz2dgpNoisy(master_seed=cfg.problem_seed, max_level=cfg.max_fidelity)
    return Parabolic1dNoisy()


def _history_csv(outdir, history, fid_labels):
    header = (
        ["iteration", "selected_index", "backfill_indices", "E", "W", "profit", "cumulative_cost"]
        + [f"n_eval_{l}" for l in fid_labels]
        + [f"n_set_{l}" for l in fid_labels]
        + ["saturated_fidelities"]
    )
    rows = []
    for rec in history:
        row = [
            rec.iteration,
            _idx_str(rec.selected),
            _idx_list_str(rec.backfill),
            rec.error,
            rec.work,
            rec.profit,
            rec.cumulative_cost,
        ]
        for l, alpha in fid_labels.items():
            row.append(rec.eval_counts.get(alpha, 0))
        for l, alpha in fid_labels.items():
            row.append(rec.set_counts.get(alpha, 0))
        row.append(";".join(_idx_str(a) for a in sorted(rec.saturated)))
        rows.append(row)
    write_csv(outdir / "history.csv", header, rows)


def run_experiment(config_path, output_dir=None, seed_override=None, quiet=False) -> int:
    """Execute one configured experiment; returns a process exit status."""
    try:
        cfg = parse_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if seed_override is not None:
        cfg.problem_seed = int(seed_override)

    root = Path(output_dir) if output_dir else Path(os.environ.get(OUTPUT_ROOT_ENV, "."))
    outdir = root / cfg.output_directory if output_dir is None else Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    def log(msg):
        if not quiet:
            print(msg)

    try:
        hierarchy = make_hierarchy(cfg)
        kit = GridKit(cfg.family, cfg.rule)
        metric_cfg = MetricConfig(n_mc=cfg.n_mc, seed=cfg.metric_seed, fd_step=cfg.fd_step)

        ref_hier = make_hierarchy(cfg)
        ref_cache = EvalCache(ref_hier)
        reference = build_reference(ref_hier, cfg.reference_w, (cfg.reference_alpha,), cache=ref_cache)

        if cfg.algorithm in ("misc", "plateau_misc", "adaptive_sc_single_fidelity"):
            adapt_cfg = AdaptConfig(
                family=cfg.family,
                rule=cfg.rule,
                max_cost=cfg.max_cost,
                max_iterations=cfg.max_iterations,
                min_profit=cfg.min_profit,
                plateau=cfg.plateau,
                snapshot_costs=cfg.snapshot_costs,
            )
            if cfg.algorithm == "adaptive_sc_single_fidelity":
                run_h = SingleFidelityView(hierarchy, (cfg.algorithm_alpha,))
                cache = EvalCache(run_h, path=outdir / "evals.cache", fresh=True)
                result = run_misc(run_h, adapt_cfg, cache=cache)
                n_model = 0
            elif cfg.algorithm == "misc":
                cache = EvalCache(hierarchy, path=outdir / "evals.cache", fresh=True)
                result = run_misc(hierarchy, adapt_cfg, cache=cache)
                n_model = hierarchy.n_model
            else:
                cache = EvalCache(hierarchy, path=outdir / "evals.cache", fresh=True)
                result = run_plateau_misc(hierarchy, adapt_cfg, cache=cache)
                n_model = hierarchy.n_model
            log(f"run finished: status={result.status} cost={cache.total_cost:.17g}")

            fid_tuples = sorted(
                set().union(*(rec.eval_counts.keys() for rec in result.history))
                if result.history
                else midx.active_fidelities(result.indices, n_model)
            )
            fid_labels = {_fid_label(a): a for a in fid_tuples}
            _history_csv(outdir, result.history, fid_labels)

            surrogate = result.surrogate
            final_set = result.indices
            snapshots = result.snapshots
            plateau_log = result.plateau_log
        else:  # reference_sc
            cache = EvalCache(hierarchy, path=outdir / "evals.cache", fresh=True)
            surrogate = build_reference(
                hierarchy, cfg.algorithm_w, (cfg.algorithm_alpha,), cache=cache
            )
            n_model = 0
            final_set = surrogate.indices
            snapshots = []
            plateau_log = {}
            write_csv(outdir / "history.csv", ["iteration"], [])

        # final multi-index set with combination coefficients
        midx.miset_to_csv(outdir / "miset.csv", final_set, coeffs=surrogate.coeffs)

        # per-snapshot sets and error metrics
        err_rows = []
        for j, snap in enumerate(snapshots):
            snap_surr = build_surrogate(
                snap.indices,
                n_model,
                kit,
                cache.evaluator(),
                fixed_alpha=getattr(surrogate, "fixed_alpha", None),
            )
            midx.miset_to_csv(
                outdir / f"miset_snapshot_{j}.csv", snap.indices, coeffs=snap_surr.coeffs
            )
            l2 = l2_error_mc(snap_surr, reference, metric_cfg, dims=hierarchy.n_y)
            h1 = h1_error_mc(snap_surr, reference, metric_cfg, dims=hierarchy.n_y)
            Yk = uniform_stream(cfg.metric_seed + 1, cfg.n_mc_ks, hierarchy.n_y)
            ks = ks2(snap_surr.evaluate_many(Yk), reference.evaluate_many(Yk))
            err_rows.append([snap.threshold, l2, h1, ks])
            log(f"snapshot {snap.threshold:.17g}: l2={l2:.3e} h1={h1:.3e} ks2={ks:.3e}")
        if not snapshots:
            l2 = l2_error_mc(surrogate, reference, metric_cfg, dims=hierarchy.n_y)
            h1 = h1_error_mc(surrogate, reference, metric_cfg, dims=hierarchy.n_y)
            Yk = uniform_stream(cfg.metric_seed + 1, cfg.n_mc_ks, hierarchy.n_y)
            ks = ks2(surrogate.evaluate_many(Yk), reference.evaluate_many(Yk))
            err_rows.append([cache.total_cost, l2, h1, ks])
        write_csv(outdir / "errors.csv", ["snapshot_cost", "l2", "h1", "ks2"], err_rows)

        # spectral exports and plateau reports per active fidelity
        sess = _Session(hierarchy, AdaptConfig(family=cfg.family, rule=cfg.rule, max_cost=1.0), cache)
        final_iteration = len(result.history) if cfg.algorithm != "reference_sc" else 0
        for alpha in sorted(midx.active_fidelities(final_set, n_model)):
            label = _fid_label(alpha)
            restricted = surrogate if n_model == 0 else sess.restricted_surrogate(final_set, alpha)
            exp = to_spectral(restricted)
            env = envelope(exp)
            write_csv(
                outdir / f"envelope_{label}.csv",
                ["total_degree", "coeff_abs_max"],
                list(enumerate(env.values)),
            )
            # coefficients below 1e-14 of the leading envelope value are
            # numerical zeros; report them as such (the expansion keeps them)
            tiny = 1e-14 * env.values[0]
            write_csv(
                outdir / f"coeffs_{label}.csv",
                [f"p{d + 1}" for d in range(exp.n_y)] + ["coeff"],
                [list(p) + [c if abs(c) >= tiny else 0.0] for p, c in zip(exp.degrees, exp.coeffs)],
            )
            reports = plateau_log.get(alpha, [])
            if not reports:
                # classic runs detect once, after the fact
                reports = [(final_iteration, detect_plateau(env, cfg.plateau))]
            write_csv(
                outdir / f"plateau_{label}.csv",
                ["iteration", "kappa", "m0", "c0", "m1", "c1", "plateau_level", "is_plateau"],
                [
                    [it, r.change_point, r.m0, r.c0, r.m1, r.c1, r.plateau_level, r.is_plateau]
                    for it, r in reports
                ],
            )

        # response surface and output density of the final surrogate
        if hierarchy.n_y == 2:
            surface_to_csv(outdir / "surface.csv", surrogate, grid_size=cfg.surface_grid)
        Ys = uniform_stream(cfg.metric_seed + 2, cfg.n_mc, hierarchy.n_y)
        samples = surrogate.evaluate_many(Ys)
        lo, hi = float(samples.min()), float(samples.max())
        pad = 0.1 * max(hi - lo, 1e-12)
        grid = np.linspace(lo - pad, hi + pad, cfg.pdf_grid_size)
        dens = kde_pdf(samples, grid)
        write_csv(outdir / "pdf.csv", ["grid", "density"], list(zip(grid, dens)))

        cache.close()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # evaluation failure: flush what exists, report
        print(f"error: evaluation failed: {exc}", file=sys.stderr)
        return 3
    return 0


def compare_runs(dir_a, dir_b, out_path=None) -> int:
    """Align two runs' errors.csv by nearest preceding snapshot; write ratios."""
    a_path = Path(dir_a) / "errors.csv"
    b_path = Path(dir_b) / "errors.csv"
    for p in (a_path, b_path):
        if not p.exists():
            print(f"error: missing {p}", file=sys.stderr)
            return 2
    rows_a = _read_errors(a_path)
    rows_b = _read_errors(b_path)
    out = Path(out_path) if out_path else Path(dir_a) / "comparison.csv"
    aligned = []
    for cost_a, l2_a, h1_a, ks_a in rows_a:
        preceding = [r for r in rows_b if r[0] <= cost_a]
        if not preceding:
            continue
        cost_b, l2_b, h1_b, ks_b = preceding[-1]
        aligned.append(
            [
                cost_a,
                cost_b,
                l2_a,
                l2_b,
                l2_a / l2_b if l2_b else math.inf,
                h1_a,
                h1_b,
                h1_a / h1_b if h1_b else math.inf,
                ks_a,
                ks_b,
                ks_a / ks_b if ks_b else math.inf,
            ]
        )
    write_csv(
        out,
        [
            "cost_a",
            "cost_b",
            "l2_a",
            "l2_b",
            "l2_ratio",
            "h1_a",
            "h1_b",
            "h1_ratio",
            "ks2_a",
            "ks2_b",
            "ks2_ratio",
        ],
        aligned,
        preamble=["alignment: nearest preceding snapshot of B for each snapshot of A"],
    )
    return 0


def _read_errors(path):
    rows = []
    with open(path) as f:
        lines = [l for l in f if not l.startswith("#")]
    for line in lines[1:]:
        parts = line.strip().split(",")
        if len(parts) >= 4:
            rows.append(tuple(float(v) for v in parts[:4]))
    rows.sort(key=lambda r: r[0])
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="misckit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment from a TOML config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--seed-override", type=int, default=None)
    p_run.add_argument("--quiet", action="store_true")
    p_cmp = sub.add_parser("compare", help="align errors.csv of two run directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--output", default=None)
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_experiment(
            args.config,
            output_dir=args.output_dir,
            seed_override=args.seed_override,
            quiet=args.quiet,
        )
    return compare_runs(args.dir_a, args.dir_b, out_path=args.output)


if __name__ == "__main__":
    sys.exit(main())
