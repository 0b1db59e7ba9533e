"""Piecewise log-linear change-point fitting and spectral plateau detection.

The envelope of a noisy surrogate decays exponentially and then flattens
at the solver-noise level.  A two-segment least-squares fit over the
burn-in/burn-out window locates the change point; a plateau is declared
when the second segment is flat and long enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Envelope

__all__ = ["PlateauParams", "PlateauReport", "fit_change_point", "detect_plateau"]


@dataclass(frozen=True)
class PlateauParams:
    burn_in: int = 2
    burn_out: int = 2
    k_min: int = 3
    slope_threshold: float = 0.1

    def __post_init__(self):
        if self.burn_in < 0 or self.burn_out < 0 or self.k_min < 0:
            raise ValueError("burn-in, burn-out and k_min must be >= 0")
        if self.slope_threshold <= 0:
            raise ValueError("slope threshold must be positive")


@dataclass(frozen=True)
class PlateauReport:
    change_point: int
    m0: float
    c0: float
    m1: float
    c1: float
    plateau_level: float
    is_plateau: bool


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept and SSE of an ordinary least-squares line."""
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        m = 0.0
    else:
        m = float(np.sum((x - xm) * (y - ym)) / sxx)
    c = ym - m * xm
    r = y - (m * x + c)
    return m, c, float(r @ r)


def fit_change_point(series) -> tuple[int, float, float, float, float]:
    """Two-segment least-squares fit of (i, v) pairs; smallest-κ tie-break.

    The change point κ is the first abscissa of the second segment; each
    segment must contain at least two points.
    """
    pts = sorted((int(i), float(v)) for i, v in series)
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if x.size < 4:
        raise ValueError("change-point fit needs at least 4 points")
    best = None
    for split in range(2, x.size - 1):
        m0, c0, e0 = _ols(x[:split], y[:split])
        m1, c1, e1 = _ols(x[split:], y[split:])
        kappa = int(x[split])
        sse = e0 + e1
        if best is None or sse < best[0]:
            best = (sse, kappa, m0, c0, m1, c1)
    return best[1], best[2], best[3], best[4], best[5]


def detect_plateau(env: Envelope, params: PlateauParams | None = None) -> PlateauReport:
    """Fit the envelope's log10 tail and report a plateau when it is flat.

    Envelopes too short for a fit (fewer than four usable entries) report
    no plateau.
    """
    p = params or PlateauParams()
    k_e = env.k_e
    lo, hi = p.burn_in, k_e - p.burn_out
    no_plateau = PlateauReport(0, 0.0, 0.0, 0.0, 0.0, 0.0, False)
    if hi - lo + 1 < 4:
        return no_plateau
    idx = np.arange(lo, hi + 1)
    series = list(zip(idx, np.log10(env.values[lo : hi + 1])))
    kappa, m0, c0, m1, c1 = fit_change_point(series)
    long_enough = (k_e - p.burn_out - kappa) > p.k_min
    if abs(m1) <= p.slope_threshold and long_enough:
        level = 10.0 ** (m1 * kappa + c1)
        return PlateauReport(kappa, m0, c0, m1, c1, level, True)
    return PlateauReport(kappa, m0, c0, m1, c1, 0.0, False)
