"""Figure builders for the experiment CSV outputs.

Each builder consumes only the documented CSV schemas and returns a
matplotlib Figure; ``render`` saves it to disk.  Nothing is recomputed
here: every number shown comes straight from the files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = (
    "surface",
    "error_curve",
    "sampling_profile",
    "envelope",
    "pdf",
    "ks_curve",
    "miset",
)


class SchemaError(Exception):
    """Raised when an input CSV does not carry the expected columns."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def read_csv(path, required=()):
    """Header-checked CSV reader; returns (columns dict, header list)."""
    path = Path(path)
    lines = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; found {header}"
        )
    cols = {h: [] for h in header}
    for line in lines[1:]:
        for h, v in zip(header, line.split(",")):
            cols[h].append(v)
    return cols, header


def _floats(cols, name):
    return np.array([float(v) for v in cols[name]])


def _label_for(spec, i, path):
    if i < len(spec.labels):
        return spec.labels[i]
    return Path(path).parent.name or Path(path).stem


def _saturation_events(history_path):
    """(cost, fidelity) pairs at which a fidelity first appears saturated."""
    cols, _ = read_csv(history_path, required=["cumulative_cost", "saturated_fidelities"])
    seen = set()
    events = []
    for cost, sat in zip(_floats(cols, "cumulative_cost"), cols["saturated_fidelities"]):
        for fid in [s for s in sat.split(";") if s]:
            if fid not in seen:
                seen.add(fid)
                events.append((cost, fid))
    return events


def build_surface(spec):
    cols, _ = read_csv(spec.inputs[0], required=["y1", "y2", "value"])
    y1, y2, v = (_floats(cols, c) for c in ("y1", "y2", "value"))
    g1, g2 = np.unique(y1), np.unique(y2)
    grid = v.reshape(g1.size, g2.size)
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    pcm = ax.pcolormesh(g1, g2, grid.T, shading="nearest", cmap="viridis")
    fig.colorbar(pcm, ax=ax, label="surrogate value")
    ax.set_xlabel("y1")
    ax.set_ylabel("y2")
    ax.set_title("response surface")
    return fig


def _curve_inputs(spec):
    """Split inputs into errors.csv files and optional history.csv files."""
    err, hist = [], []
    for p in spec.inputs:
        _, header = read_csv(p)
        if "saturated_fidelities" in header:
            hist.append(p)
        else:
            err.append(p)
    if not err:
        raise SchemaError("error curves need at least one errors.csv input")
    return err, hist


def _error_like_curve(spec, column, title):
    err_files, hist_files = _curve_inputs(spec)
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    for i, p in enumerate(err_files):
        cols, _ = read_csv(p, required=["snapshot_cost", column])
        ax.loglog(
            _floats(cols, "snapshot_cost"),
            _floats(cols, column),
            marker="o",
            label=_label_for(spec, i, p),
        )
    for hp in hist_files:
        for cost, fid in _saturation_events(hp):
            ax.annotate(
                f"fidelity {fid} saturated",
                xy=(cost, ax.get_ylim()[0]),
                xytext=(cost, ax.get_ylim()[0] * 2.5),
                arrowprops=dict(arrowstyle="->", color="tab:red"),
                rotation=90,
                fontsize=7,
                color="tab:red",
                gid="saturation-arrow",
            )
    ax.set_xlabel("computational cost")
    ax.set_ylabel(column)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return fig


def build_error_curve(spec):
    return _error_like_curve(spec, "l2", "estimated L2 error vs cost")


def build_ks_curve(spec):
    return _error_like_curve(spec, "ks2", "KS statistic vs cost")


def build_sampling_profile(spec):
    cols, header = read_csv(spec.inputs[0], required=["cumulative_cost"])
    fid_cols = [h for h in header if h.startswith("n_eval_")]
    if not fid_cols:
        raise SchemaError(f"{spec.inputs[0]}: no n_eval_* columns; found {header}")
    cost = _floats(cols, "cumulative_cost")
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    for h in fid_cols:
        ax.semilogx(cost, _floats(cols, h), drawstyle="steps-post", label=h.removeprefix("n_eval_"))
    ax.set_xlabel("computational cost")
    ax.set_ylabel("solves per fidelity")
    ax.set_title("sampling profile")
    ax.legend(title="fidelity")
    ax.grid(True, which="both", alpha=0.3)
    return fig


def build_envelope(spec):
    env_cols, _ = read_csv(spec.inputs[0], required=["total_degree", "coeff_abs_max"])
    deg = _floats(env_cols, "total_degree")
    env = _floats(env_cols, "coeff_abs_max")
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    ax.semilogy(deg, env, "o--", label="envelope")
    if len(spec.inputs) > 1:
        plat_cols, _ = read_csv(
            spec.inputs[1],
            required=["kappa", "m0", "c0", "m1", "c1", "plateau_level", "is_plateau"],
        )
        kappa = float(plat_cols["kappa"][-1])
        m0, c0 = float(plat_cols["m0"][-1]), float(plat_cols["c0"][-1])
        m1, c1 = float(plat_cols["m1"][-1]), float(plat_cols["c1"][-1])
        lo = deg.min()
        i0 = np.linspace(lo, kappa, 32)
        i1 = np.linspace(kappa, deg.max(), 32)
        ax.semilogy(i0, 10.0 ** (m0 * i0 + c0), "-", color="tab:orange", label="decay fit")
        ax.semilogy(i1, 10.0 ** (m1 * i1 + c1), "-", color="tab:red", label="plateau fit")
        ax.axvline(kappa, color="tab:red", linestyle=":", gid="change-point")
        ax.plot(
            [kappa],
            [10.0 ** (m1 * kappa + c1)],
            marker="*",
            markersize=12,
            color="tab:red",
            gid="change-point-marker",
        )
    ax.set_xlabel("total polynomial degree")
    ax.set_ylabel("max |coefficient|")
    ax.set_title("spectral envelope")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return fig


def build_pdf(spec):
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    for i, p in enumerate(spec.inputs):
        cols, _ = read_csv(p, required=["grid", "density"])
        ax.plot(_floats(cols, "grid"), _floats(cols, "density"), label=_label_for(spec, i, p))
    ax.set_xlabel("surrogate output")
    ax.set_ylabel("density")
    ax.set_title("output density")
    ax.legend()
    ax.grid(alpha=0.3)
    return fig


def build_miset(spec):
    cols, header = read_csv(spec.inputs[0], required=["i1", "coeff"])
    dims = [h for h in header if h.startswith("i")]
    data = np.array([[int(v) for v in cols[h]] for h in dims]).T
    coeff = np.array([int(v) for v in cols["coeff"]])
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    if data.shape[1] >= 3:
        fids = np.unique(data[:, 0])
        for fid in fids:
            mask = data[:, 0] == fid
            active = mask & (coeff != 0)
            ax.scatter(
                data[mask, 1],
                data[mask, 2] + (fid - 1) * 0.12,
                s=24,
                alpha=0.4,
                label=f"fidelity {fid}",
            )
            ax.scatter(data[active, 1], data[active, 2] + (fid - 1) * 0.12, s=36, marker="s")
        ax.set_xlabel(dims[1])
        ax.set_ylabel(dims[2])
        ax.legend(fontsize=7)
    else:
        ax.scatter(data[:, 0], data[:, 1] if data.shape[1] > 1 else np.zeros(len(data)), s=30)
        ax.set_xlabel(dims[0])
        if data.shape[1] > 1:
            ax.set_ylabel(dims[1])
    ax.set_title("multi-index set (squares: non-zero coefficient)")
    ax.grid(alpha=0.3)
    return fig


_BUILDERS = {
    "surface": build_surface,
    "error_curve": build_error_curve,
    "sampling_profile": build_sampling_profile,
    "envelope": build_envelope,
    "pdf": build_pdf,
    "ks_curve": build_ks_curve,
    "miset": build_miset,
}


def build_figure(spec: FigureSpec):
    return _BUILDERS[spec.kind](spec)


def render(spec: FigureSpec) -> Path:
    """Build the figure and write it to ``spec.output``; returns the path."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return out
