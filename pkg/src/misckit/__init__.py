"""Multi-fidelity sparse-grid surrogate modelling with noise-robust refinement."""

from .adaptive import (
    AdaptConfig,
    RunResult,
    build_reference,
    error_indicator,
    filter_profits,
    run_misc,
    run_plateau_misc,
    work_indicator,
)
from .combiner import GridKit, Surrogate, build_surrogate, collocation_requests, combination_coeffs
from .knots import KnotFamily, LevelToKnots, is_nested, knots_1d, level_to_knots
from .metrics import MetricConfig, h1_error_mc, kde_pdf, ks2, l2_error_mc
from .midx import (
    active_fidelities,
    backfill_set,
    is_admissible,
    margin,
    modified_reduced_margin,
    reduced_margin,
    restrict,
)
from .models import EvalCache, Genz2dgpNoisy, ModelHierarchy, Parabolic1dNoisy, SingleFidelityView
from .plateau import PlateauParams, PlateauReport, detect_plateau, fit_change_point
from .spectral import Envelope, SpectralExpansion, envelope, poly_degree_set, to_spectral

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
