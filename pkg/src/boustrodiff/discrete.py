"""Exact transect clipping and the discrete fitness score.

This is the ground truth the relaxed formulation is compared against, plus
the boustrophedon waypoint export for an optimized (theta, offset).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadPPT, EmptyPlan, InvalidParameter, NonPositiveTemperature
from .geometry import EdgeHalfPlane, NormalizedPolygon, edge_arrays, rotate

ZERO_LENGTH = 1e-12
_FLAT_EDGE = 1e-14
# candidate lines run to +-0.6 so the field covers [-0.5, 0.5] for any offset
_FIELD_HALF_SPAN = 0.6


@dataclass(frozen=True)
class TransectField:
    """Vertical lines ``x_j = j * spacing + offset`` for ``j`` in ``[-N, N]``.

    ``N = ceil(0.6 / spacing)`` depends on the spacing only, so sliding the
    offset never adds or removes candidate lines.
    """

    spacing: float
    x_offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.spacing) and 0 < self.spacing <= 1):
            raise InvalidParameter(f"spacing must lie in (0, 1], got {self.spacing}")
        if not math.isfinite(self.x_offset):
            raise InvalidParameter(f"x_offset must be finite, got {self.x_offset}")

    @property
    def n_index(self) -> int:
        return math.ceil(_FIELD_HALF_SPAN / self.spacing)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n_index, self.n_index + 1)

    @property
    def normalized_offset(self) -> float:
        return wrap_offset(self.x_offset, self.spacing)

    def with_offset(self, x_offset: float) -> "TransectField":
        return TransectField(self.spacing, x_offset)

    def abscissae(self) -> np.ndarray:
        return self.indices * self.spacing + self.normalized_offset


def wrap_offset(offset: float, spacing: float) -> float:
    """Reduce ``offset`` modulo ``spacing`` into ``[-spacing/2, spacing/2)``."""
    half = spacing / 2
    w = (offset + half) % spacing - half
    if w >= half:  # float rounding in the modulo
        w -= spacing
    return w


@dataclass(frozen=True)
class ScoreParams:
    """Fitness weights, sigmoid temperature and quadrature resolution."""

    a: float = 0.5
    b: float = 0.5
    temperature: float = 1000.0
    ppt: int = 1000

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0):
            raise InvalidParameter(f"weights must be non-negative, got a={self.a}, b={self.b}")
        if abs(self.a + self.b - 1) > 1e-9:
            raise InvalidParameter(f"weights must sum to 1, got a + b = {self.a + self.b}")
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise NonPositiveTemperature(f"temperature must be positive, got {self.temperature}")
        if int(self.ppt) != self.ppt or self.ppt < 2:
            raise BadPPT(f"points per transect must be an integer >= 2, got {self.ppt}")

    def with_temperature(self, temperature: float) -> "ScoreParams":
        return ScoreParams(self.a, self.b, temperature, self.ppt)


@dataclass
class ScoreReport:
    mean_length: float
    std_length: float
    fitness: float
    transect_lengths: list[float]
    shown_count: float

    def to_json(self) -> dict:
        return {
            "mean_length": self.mean_length,
            "std_length": self.std_length,
            "fitness": self.fitness,
            "shown_count": self.shown_count,
            "transect_lengths": list(self.transect_lengths),
        }


def chord_intervals(W: np.ndarray, B: np.ndarray, xs) -> tuple[np.ndarray, np.ndarray]:
    """Feasible ``[lo, hi]`` in y of each vertical line, clipped to [-0.5, 0.5].

    Empty chords come back with ``hi < lo``.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    a = xs[:, None] * W[None, :, 0] + B[None, :]  # (L, K): W . (x, 0) + B
    wy = np.broadcast_to(W[:, 1], a.shape)
    flat = np.abs(wy) < _FLAT_EDGE
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = -a / wy
    lo = np.where(wy >= _FLAT_EDGE, bound, -np.inf).max(axis=1)
    hi = np.where(wy <= -_FLAT_EDGE, bound, np.inf).min(axis=1)
    lo = np.maximum(lo, -0.5)
    hi = np.minimum(hi, 0.5)
    rejected = (flat & (a < 0)).any(axis=1)
    hi = np.where(rejected, -np.inf, hi)
    return lo, hi


def chord_lengths(W: np.ndarray, B: np.ndarray, xs) -> np.ndarray:
    lo, hi = chord_intervals(W, B, xs)
    return np.maximum(0.0, hi - lo)


def clip_transect(edges: Sequence[EdgeHalfPlane], x: float) -> float:
    """Exact length of the vertical line at ``x`` inside the polygon."""
    W, B = edge_arrays(edges)
    return float(chord_lengths(W, B, [x])[0])


def fitness_from_lengths(lengths: np.ndarray, params: ScoreParams) -> ScoreReport:
    lengths = np.asarray(lengths, dtype=float)
    shown = lengths[lengths > ZERO_LENGTH]
    if shown.size == 0:
        mean = std = 0.0
    else:
        mean = float(shown.mean())
        std = float(shown.std())
    fitness = params.a * mean + params.b * (1.0 - std)
    return ScoreReport(mean, std, fitness, lengths.tolist(), float(shown.size))


def discrete_score(edges: Sequence[EdgeHalfPlane], field: TransectField, params: ScoreParams) -> ScoreReport:
    """Exact fitness ``a * mean + b * (1 - std)`` over the non-empty chords."""
    W, B = edge_arrays(edges)
    return fitness_from_lengths(chord_lengths(W, B, field.abscissae()), params)


class StartCorner(str, enum.Enum):
    """Where the path begins, in the frame where transects are vertical."""

    BOTTOM_LEFT = "bottom_left"
    TOP_LEFT = "top_left"
    BOTTOM_RIGHT = "bottom_right"
    TOP_RIGHT = "top_right"


@dataclass
class PathPlan:
    waypoints: list[tuple[float, float]]
    total_length: float
    unit_waypoints: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {"waypoints": [[x, y] for x, y in self.waypoints], "total_length": self.total_length}


def build_path(
    poly: NormalizedPolygon,
    theta: float,
    field: TransectField,
    start_corner: StartCorner | str = StartCorner.BOTTOM_LEFT,
) -> PathPlan:
    """Boustrophedon waypoints in user coordinates.

    Chords are taken on the polygon rotated by ``theta``, visited in x order
    with alternating direction and joined by straight connectors, then mapped
    back through the inverse rotation and normalization.
    """
    start_corner = StartCorner(start_corner)
    W, B = edge_arrays(rotate(poly.edges, theta))
    xs = field.abscissae()
    lo, hi = chord_intervals(W, B, xs)
    keep = (hi - lo) > ZERO_LENGTH
    if not keep.any():
        raise EmptyPlan("no transect intersects the polygon")
    xs, lo, hi = xs[keep], lo[keep], hi[keep]
    if start_corner in (StartCorner.BOTTOM_RIGHT, StartCorner.TOP_RIGHT):
        xs, lo, hi = xs[::-1], lo[::-1], hi[::-1]
    upward = start_corner in (StartCorner.BOTTOM_LEFT, StartCorner.BOTTOM_RIGHT)

    pts = []
    for x, y0, y1 in zip(xs, lo, hi):
        if upward:
            pts += [(x, y0), (x, y1)]
        else:
            pts += [(x, y1), (x, y0)]
        upward = not upward
    rotated = np.array(pts, dtype=float)
    c, s = math.cos(theta), math.sin(theta)
    # undo the polygon rotation: X_unit = R(-theta) X_rotated
    unit = np.column_stack([c * rotated[:, 0] + s * rotated[:, 1], -s * rotated[:, 0] + c * rotated[:, 1]])
    user = poly.inverse_transform.to_user(unit)
    total = float(np.linalg.norm(np.diff(user, axis=0), axis=1).sum())
    return PathPlan(
        waypoints=[(float(x), float(y)) for x, y in user],
        total_length=total,
        unit_waypoints=[(float(x), float(y)) for x, y in unit],
    )
