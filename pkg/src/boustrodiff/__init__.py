"""Differentiable scoring and optimization of boustrophedon transects over convex polygons."""

__version__ = "0.1.0"

from .discrete import (
    PathPlan,
    ScoreParams,
    ScoreReport,
    StartCorner,
    TransectField,
    build_path,
    clip_transect,
    discrete_score,
)
from .diffable import (
    DiffScoreReport,
    polygon_indicator,
    score_and_gradient,
    shown_indicator,
    soft_score,
    stable_sigmoid,
    transect_length,
)
from .geometry import (
    EdgeHalfPlane,
    NormalizedPolygon,
    ValidatedPolygon,
    min_enclosing_circle,
    normalize,
    rotate,
    validate,
)
from .optimize import OptimizerConfig, OptimumReport, Schedule, gradient_ascent, grid_search, hybrid, temperature_at
