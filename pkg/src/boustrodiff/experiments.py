"""Random polygons and the three studies: score parity, score surfaces, and
lattice search versus gradient ascent.

Every sample draws from its own generator seeded by ``(seed, index)``, and
results are gathered in index order, so the thread count never changes the
numbers.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .discrete import ScoreParams, TransectField, discrete_score
from .diffable import evaluate_batch
from .errors import BadSideCount, BoustroError, InvalidParameter
from .geometry import NormalizedPolygon, ValidatedPolygon, normalize, rotate, validate
from .optimize import OptimizerConfig, gradient_ascent, grid_search, random_init

SPACING_RANGE = (0.05, 0.3)
SIDE_RANGE = (3, 10)  # half-open


def parallel_map(fn: Callable, items: Iterable, threads: int = 1) -> list:
    """Ordered map; ``threads`` <= 0 means one worker per CPU."""
    items = list(items)
    if threads <= 0:
        threads = os.cpu_count() or 1
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def random_convex_polygon(seed, n_sides: int) -> ValidatedPolygon:
    """Random strictly convex polygon with exactly ``n_sides`` vertices.

    Valtr's construction: split sorted random x and y coordinates into two
    monotone chains each, pair the resulting edge vectors at random, sort
    them by angle and chain them end to end.  ``seed`` may be an int or a
    ``numpy.random.Generator``.
    """
    if not SIDE_RANGE[0] <= n_sides < SIDE_RANGE[1]:
        raise BadSideCount(f"n_sides must be in [{SIDE_RANGE[0]}, {SIDE_RANGE[1]}), got {n_sides}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        xs = np.sort(rng.random(n_sides))
        ys = np.sort(rng.random(n_sides))
        dx = _chain_vectors(xs, rng)
        dy = _chain_vectors(ys, rng)
        rng.shuffle(dy)
        vecs = np.column_stack([dx, dy])
        vecs = vecs[np.argsort(np.arctan2(vecs[:, 1], vecs[:, 0]), kind="stable")]
        pts = np.cumsum(vecs, axis=0)
        pts -= pts.mean(axis=0)
        try:
            return validate([tuple(p) for p in pts])
        except BoustroError:
            continue  # collinear edge vectors; draw again


def _chain_vectors(coords: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    lo, hi = coords[0], coords[-1]
    last_a = last_b = lo
    out = []
    for c in coords[1:-1]:
        if rng.random() < 0.5:
            out.append(c - last_a)
            last_a = c
        else:
            out.append(last_b - c)
            last_b = c
    out.append(hi - last_a)
    out.append(last_b - hi)
    return np.array(out)


@dataclass(frozen=True)
class Sample:
    polygon: ValidatedPolygon
    theta: float
    spacing: float
    offset: float


def random_sample(seed: int, index: int, spacing_range=SPACING_RANGE) -> Sample:
    rng = sample_rng(seed, index)
    n = int(rng.integers(SIDE_RANGE[0], SIDE_RANGE[1]))
    poly = random_convex_polygon(rng, n)
    theta = float(rng.uniform(0, math.pi))
    spacing = float(rng.uniform(*spacing_range))
    offset = float(rng.uniform(-spacing / 2, spacing / 2))
    return Sample(poly, theta, spacing, offset)


# -- parity ------------------------------------------------------------------


@dataclass
class ParityRow:
    temperature: float
    ppt: int
    mean_abs_error: float
    samples: int


def _sample_errors(sample: Sample, temps, ppts, a: float, b: float) -> np.ndarray:
    poly = normalize(sample.polygon)
    field = TransectField(sample.spacing, sample.offset)
    truth = discrete_score(rotate(poly.edges, sample.theta), field, ScoreParams(a, b)).fitness
    W, B = poly.edge_arrays()
    errs = np.empty((len(temps), len(ppts)))
    for i, T in enumerate(temps):
        for j, ppt in enumerate(ppts):
            soft = evaluate_batch(W, B, sample.theta, sample.offset, sample.spacing, ScoreParams(a, b, T, ppt)).fitness[0]
            errs[i, j] = abs(truth - soft)
    return errs


def parity_experiment(
    seed: int = 0,
    temps: Sequence[float] = (1, 10, 100, 1000, 10000),
    ppts: Sequence[int] = (100, 1000),
    spacing_range=SPACING_RANGE,
    samples: int = 100,
    a: float = 0.5,
    b: float = 0.5,
    threads: int = 1,
) -> list[ParityRow]:
    """Mean |discrete - relaxed| fitness per (temperature, ppt) cell.

    The same ``samples`` random (polygon, theta, offset, spacing) tuples are
    reused in every cell so the cells differ only in the relaxation settings.
    """
    if samples < 1:
        raise InvalidParameter(f"samples must be >= 1, got {samples}")
    draws = [random_sample(seed, i, spacing_range) for i in range(samples)]
    errs = np.stack(parallel_map(lambda s: _sample_errors(s, temps, ppts, a, b), draws, threads))
    mean = errs.mean(axis=0)
    return [
        ParityRow(float(T), int(ppt), float(mean[i, j]), samples)
        for i, T in enumerate(temps)
        for j, ppt in enumerate(ppts)
    ]


def parity_csv(rows: Sequence[ParityRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["temperature", "ppt", "mean_abs_error", "samples"])
    for r in rows:
        w.writerow([repr(r.temperature), r.ppt, repr(r.mean_abs_error), r.samples])
    return buf.getvalue()


# -- surfaces ----------------------------------------------------------------

AXIS_NAMES = ("theta", "x_offset", "temperature")


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    steps: int
    endpoint: bool = True

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise InvalidParameter(f"axis must be one of {AXIS_NAMES}, got {self.name!r}")
        if self.steps < 1:
            raise InvalidParameter(f"axis {self.name} needs at least one step")
        if self.name == "temperature" and not (self.start > 0 and self.stop > 0):
            raise InvalidParameter("temperature axis must be positive")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps, endpoint=self.endpoint)


@dataclass
class SurfaceGrid:
    axes: list[Axis]
    fixed: dict
    values: np.ndarray = field(repr=False)

    def coordinates(self) -> list[np.ndarray]:
        return [ax.values() for ax in self.axes]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([ax.name for ax in self.axes] + ["fitness"])
        coords = self.coordinates()
        for idx in np.ndindex(*self.values.shape):
            w.writerow([repr(float(coords[k][i])) for k, i in enumerate(idx)] + [repr(float(self.values[idx]))])
        return buf.getvalue()


def surface_sample(
    poly: NormalizedPolygon,
    axes: Sequence[Axis],
    field: TransectField,
    params: ScoreParams,
    theta: float = 0.0,
) -> SurfaceGrid:
    """Relaxed fitness on a 1-D or 2-D lattice of theta/offset/temperature.

    Parameters not swept stay at ``theta``, ``field.x_offset`` and
    ``params.temperature``.  Values are row-major over ``axes``.
    """
    axes = list(axes)
    if not 1 <= len(axes) <= 2 or len({a.name for a in axes}) != len(axes):
        raise InvalidParameter("surface needs one or two distinct axes")
    fixed = {"theta": theta, "x_offset": field.x_offset, "temperature": params.temperature}
    names = [a.name for a in axes]
    for n in names:
        fixed.pop(n)
    mesh = np.meshgrid(*[a.values() for a in axes], indexing="ij")
    cols = {n: m.ravel() for n, m in zip(names, mesh)}
    size = mesh[0].size
    th = cols.get("theta", np.full(size, theta))
    off = cols.get("x_offset", np.full(size, field.x_offset))
    temp = cols.get("temperature", np.full(size, params.temperature))

    W, B = poly.edge_arrays()
    out = np.empty(size)
    for T in np.unique(temp):
        sel = temp == T
        out[sel] = evaluate_batch(W, B, th[sel], off[sel], field.spacing, params.with_temperature(float(T))).fitness
    return SurfaceGrid(axes, fixed, out.reshape(mesh[0].shape))


def count_local_maxima(values, circular: bool = False) -> int:
    """Strict local maxima of a 1-D sampled curve."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 0
    if circular:
        left, right = np.roll(v, 1), np.roll(v, -1)
        return int(((v > left) & (v > right)).sum())
    return int(((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])).sum())


def total_variation(values) -> float:
    return float(np.abs(np.diff(np.asarray(values, dtype=float))).sum())


def parallelogram(aspect: float = 2.0, shear: float = 0.5) -> ValidatedPolygon:
    """Sheared rectangle ``aspect`` wide and 1 tall."""
    return validate([(0.0, 0.0), (aspect, 0.0), (aspect + shear, 1.0), (shear, 1.0)])


# -- lattice search versus gradient ascent ------------------------------------


@dataclass
class GapRow:
    index: int
    n_sides: int
    spacing: float
    grid_best: float
    gd_best: float
    hybrid_best: float


@dataclass
class GapReport:
    n_polygons: int
    mean_gap: float
    gd_wins: int
    hybrid_not_worse: int
    rows: list[GapRow] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n_polygons": self.n_polygons,
            "mean_gap": self.mean_gap,
            "gd_wins": self.gd_wins,
            "hybrid_not_worse": self.hybrid_not_worse,
            "rows": [vars(r) for r in self.rows],
        }


def _gap_row(index: int, seed: int, cfg: OptimizerConfig, params: ScoreParams, spacing, gd_init: str) -> GapRow:
    rng = sample_rng(seed, index)
    n = int(rng.integers(SIDE_RANGE[0], SIDE_RANGE[1]))
    poly_raw = random_convex_polygon(rng, n)
    s = float(rng.uniform(*SPACING_RANGE)) if spacing is None else float(spacing)
    init_seed = int(rng.integers(2**31))
    poly = normalize(poly_raw)
    field = TransectField(s)
    grid = grid_search(poly, field, params, cfg)
    grid_start = (grid.best_theta, grid.best_offset)
    start = grid_start if gd_init == "grid" else random_init(s, init_seed)
    gd = gradient_ascent(poly, field, params, cfg, start)
    if gd_init == "grid":
        refined = gd
    else:
        refined = gradient_ascent(poly, field, params, cfg, grid_start)
    hybrid_best = max(grid.best_fitness, refined.best_fitness)
    return GapRow(index, n, s, grid.best_fitness, gd.best_fitness, hybrid_best)


def grid_vs_gd(
    seed: int = 0,
    n_polygons: int = 100,
    cfg: OptimizerConfig | None = None,
    params: ScoreParams | None = None,
    spacing: float | None = None,
    gd_init: str = "random",
    threads: int = 1,
) -> GapReport:
    """Per random polygon: lattice best versus gradient ascent best.

    ``gd_init="random"`` starts ascent from a uniform random pose, as a
    standalone alternative to the lattice; ``"grid"`` starts it at the lattice
    winner.  The hybrid value (lattice refined by ascent) is reported too.
    ``spacing=None`` draws a spacing per polygon.  The default lattice is
    angle-only (one offset column), the baseline the ascent competes with.
    """
    if n_polygons < 1:
        raise InvalidParameter(f"n_polygons must be >= 1, got {n_polygons}")
    if gd_init not in ("random", "grid"):
        raise InvalidParameter(f"gd_init must be 'random' or 'grid', got {gd_init!r}")
    cfg = cfg or OptimizerConfig(offset_steps=1)
    params = params or ScoreParams(temperature=1000.0, ppt=200)
    rows = parallel_map(lambda i: _gap_row(i, seed, cfg, params, spacing, gd_init), range(n_polygons), threads)
    gaps = np.array([r.grid_best - r.gd_best for r in rows])
    return GapReport(
        n_polygons=n_polygons,
        mean_gap=float(gaps.mean()),
        gd_wins=int((gaps < 0).sum()),
        hybrid_not_worse=int(sum(r.hybrid_best >= r.grid_best - 1e-9 for r in rows)),
        rows=rows,
    )
