"""Monte-Carlo error norms, kernel density estimation and the KS statistic.

The sampling stream is counter-based and keyed only by the metric seed, so
estimates are comparable across algorithm variants and bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MetricConfig", "uniform_stream", "l2_error_mc", "h1_error_mc", "kde_pdf", "ks2"]


@dataclass(frozen=True)
class MetricConfig:
    n_mc: int = 10_000
    seed: int = 0
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.n_mc < 2:
            raise ValueError("n_mc must be >= 2")
        if not 0.0 < self.fd_step < 1e-2:
            raise ValueError("fd_step must be in (0, 1e-2)")


def uniform_stream(seed: int, n: int, dims: int) -> np.ndarray:
    """Deterministic uniform sample block of shape (n, dims)."""
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return gen.random((n, dims))


def _eval(f, Y) -> np.ndarray:
    if hasattr(f, "evaluate_many"):
        return np.asarray(f.evaluate_many(Y))
    return np.array([f(y) for y in Y])


def l2_error_mc(a, b, cfg: MetricConfig, dims: int = 2) -> float:
    """Root mean square of a - b over a seeded uniform sample."""
    Y = uniform_stream(cfg.seed, cfg.n_mc, dims)
    d = _eval(a, Y) - _eval(b, Y)
    return float(np.sqrt(np.mean(d * d)))


def h1_error_mc(a, b, cfg: MetricConfig, dims: int = 2) -> float:
    """L2 error plus a central-difference gradient seminorm.

    Sample points are clamped ``fd_step`` away from the boundary so the
    difference stencils stay inside the domain.
    """
    h = cfg.fd_step
    Y = np.clip(uniform_stream(cfg.seed, cfg.n_mc, dims), h, 1.0 - h)
    diff = _eval(a, Y) - _eval(b, Y)
    total = diff * diff
    for d in range(dims):
        Yp = Y.copy()
        Yp[:, d] += h
        Ym = Y.copy()
        Ym[:, d] -= h
        grad = ((_eval(a, Yp) - _eval(b, Yp)) - (_eval(a, Ym) - _eval(b, Ym))) / (2 * h)
        total = total + grad * grad
    return float(np.sqrt(np.mean(total)))


def kde_pdf(samples, grid) -> np.ndarray:
    """Gaussian kernel density with Silverman bandwidth on the given grid."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 10:
        raise ValueError("kernel density estimate needs at least 10 samples")
    g = np.asarray(grid, dtype=float).reshape(-1)
    sigma = float(np.std(x, ddof=1))
    bw = 1.06 * sigma * x.size ** (-0.2)
    if bw <= 0.0:
        bw = max(1e-12, 1e-3 * max(abs(float(x[0])), 1.0))
    out = np.zeros_like(g)
    norm = 1.0 / (bw * np.sqrt(2.0 * np.pi) * x.size)
    chunk = max(1, 10_000_000 // max(g.size, 1))
    for start in range(0, x.size, chunk):
        block = x[start : start + chunk]
        z = (g[:, None] - block[None, :]) / bw
        out += norm * np.exp(-0.5 * z * z).sum(axis=1)
    return out


def ks2(samples_a, samples_b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b|."""
    a = np.sort(np.asarray(samples_a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(samples_b, dtype=float).reshape(-1))
    if a.size == 0 or b.size == 0:
        raise ValueError("both sample sets must be non-empty")
    allv = np.concatenate([a, b])
    fa = np.searchsorted(a, allv, side="right") / a.size
    fb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
