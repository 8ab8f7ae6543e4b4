"""Search over transect angle and lateral offset.

Three strategies: a uniform lattice scan, momentum gradient ascent on the
relaxed fitness, and a hybrid that refines the lattice winner by gradient
ascent.  Angles live in [0, pi): rotating by pi mirrors the field, so
``f(theta + pi, offset) == f(theta, -offset)`` and the upper half is
redundant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .discrete import ScoreParams, TransectField, chord_lengths, fitness_from_lengths, wrap_offset
from .diffable import evaluate_batch
from .errors import DivergenceDetected, InvalidParameter, NonPositiveTemperature
from .geometry import NormalizedPolygon

MODES = ("grid", "gd", "hybrid")
# lattice values this close to the maximum count as ties (lowest index wins)
TIE_TOL = 1e-12
PLATEAU_ITERS = 10


@dataclass(frozen=True)
class Schedule:
    """Geometric temperature ramp from ``t_start`` to ``t_end``."""

    t_start: float
    t_end: float
    ramp_iters: int

    def __post_init__(self):
        if not (self.t_start > 0 and self.t_end > 0):
            raise NonPositiveTemperature(f"schedule temperatures must be positive, got {self.t_start}, {self.t_end}")
        if self.ramp_iters < 0:
            raise InvalidParameter(f"ramp_iters must be >= 0, got {self.ramp_iters}")


def temperature_at(schedule: Schedule, iteration: int) -> float:
    if schedule.ramp_iters == 0 or iteration >= schedule.ramp_iters:
        return float(schedule.t_end)
    frac = iteration / schedule.ramp_iters
    return float(schedule.t_start * (schedule.t_end / schedule.t_start) ** frac)


@dataclass(frozen=True)
class OptimizerConfig:
    mode: str = "hybrid"
    theta_steps: int = 180
    offset_steps: int = 5
    lr_theta: float = 0.01
    lr_offset: float = 0.005
    momentum: float = 0.8
    max_iters: int = 100
    tol: float = 1e-7
    schedule: Schedule | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidParameter(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.theta_steps < 1 or self.offset_steps < 1:
            raise InvalidParameter("grid steps must be >= 1")
        if not (self.lr_theta > 0 and self.lr_offset > 0):
            raise InvalidParameter("learning rates must be positive")
        if not 0 <= self.momentum < 1:
            raise InvalidParameter(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.max_iters < 0:
            raise InvalidParameter(f"max_iters must be >= 0, got {self.max_iters}")
        if not self.tol >= 0:
            raise InvalidParameter(f"tol must be >= 0, got {self.tol}")

    def final_temperature(self, params: ScoreParams) -> float:
        return float(self.schedule.t_end) if self.schedule else float(params.temperature)


class TraceEntry(NamedTuple):
    iteration: int
    theta: float
    offset: float
    fitness: float
    temperature: float


@dataclass
class OptimumReport:
    best_theta: float
    best_offset: float
    best_fitness: float
    trace: list[TraceEntry] = field(default_factory=list)
    evaluations: int = 0

    def to_json(self, include_trace: bool = True) -> dict:
        out = {
            "theta": self.best_theta,
            "x_offset": self.best_offset,
            "fitness": self.best_fitness,
            "evaluations": self.evaluations,
        }
        if include_trace:
            out["trace"] = [list(t) for t in self.trace]
        return out


def wrap_pose(theta: float, offset: float, spacing: float) -> tuple[float, float, bool]:
    """Bring ``theta`` into [0, pi), mirroring the offset on odd half-turns.

    Returns ``(theta, offset, mirrored)``.
    """
    k = math.floor(theta / math.pi)
    theta -= k * math.pi
    if theta >= math.pi:
        theta -= math.pi
        k += 1
    mirrored = bool(k % 2)
    if mirrored:
        offset = -offset
    return theta, wrap_offset(offset, spacing), mirrored


def lattice(spacing: float, cfg: OptimizerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Flattened (theta, offset) lattice, theta-major."""
    thetas = np.arange(cfg.theta_steps) * (math.pi / cfg.theta_steps)
    offsets = -spacing / 2 + np.arange(cfg.offset_steps) * (spacing / cfg.offset_steps)
    tt, oo = np.meshgrid(thetas, offsets, indexing="ij")
    return tt.ravel(), oo.ravel()


def pick_best(values) -> int:
    values = np.asarray(values, dtype=float)
    return int(np.flatnonzero(values >= values.max() - TIE_TOL)[0])


def discrete_fitness_batch(poly: NormalizedPolygon, thetas, offsets, field: TransectField, params: ScoreParams):
    W, B = poly.edge_arrays()
    out = []
    for t, o in zip(np.atleast_1d(thetas), np.atleast_1d(offsets)):
        c, s = math.cos(t), math.sin(t)
        Wr = np.column_stack([c * W[:, 0] - s * W[:, 1], s * W[:, 0] + c * W[:, 1]])
        lengths = chord_lengths(Wr, B, field.with_offset(o).abscissae())
        out.append(fitness_from_lengths(lengths, params).fitness)
    return np.array(out)


def grid_search(
    poly: NormalizedPolygon,
    field: TransectField,
    params: ScoreParams,
    cfg: OptimizerConfig,
    scorer: str = "soft",
) -> OptimumReport:
    """Scan the uniform lattice over [0, pi) x [-spacing/2, spacing/2).

    Ties go to the lowest theta, then the lowest offset.
    """
    thetas, offsets = lattice(field.spacing, cfg)
    temp = cfg.final_temperature(params)
    p = params.with_temperature(temp)
    if scorer == "soft":
        W, B = poly.edge_arrays()
        values = evaluate_batch(W, B, thetas, offsets, field.spacing, p).fitness
    elif scorer == "discrete":
        values = discrete_fitness_batch(poly, thetas, offsets, field, p)
    else:
        raise InvalidParameter(f"scorer must be 'soft' or 'discrete', got {scorer!r}")
    i = pick_best(values)
    trace = [TraceEntry(k, float(t), float(o), float(f), temp) for k, (t, o, f) in enumerate(zip(thetas, offsets, values))]
    return OptimumReport(float(thetas[i]), float(offsets[i]), float(values[i]), trace, len(values))


def gradient_ascent(
    poly: NormalizedPolygon,
    field: TransectField,
    params: ScoreParams,
    cfg: OptimizerConfig,
    init: tuple[float, float],
) -> OptimumReport:
    """Momentum ascent ``v <- mu v + g; p <- p + lr * v`` on (theta, offset).

    Stops after ``max_iters`` steps or once the fitness has moved by less
    than ``tol`` for 10 consecutive steps.  With a schedule, every visited
    point is re-scored at the final temperature before picking the best.
    """
    W, B = poly.edge_arrays()
    spacing = field.spacing
    lr = np.array([cfg.lr_theta, cfg.lr_offset])
    final_temp = cfg.final_temperature(params)

    def evaluate(theta, offset, temp):
        b = evaluate_batch(W, B, theta, offset, spacing, params.with_temperature(temp), want_grad=True)
        f = float(b.fitness[0])
        g = np.array([b.d_theta[0], b.d_offset[0]])
        if not (math.isfinite(f) and np.isfinite(g).all()):
            raise DivergenceDetected(f"fitness became non-finite at theta={theta}, offset={offset}, T={temp}")
        return f, g

    theta, offset, _ = wrap_pose(float(init[0]), float(init[1]), spacing)
    temp = temperature_at(cfg.schedule, 0) if cfg.schedule else final_temp
    f, g = evaluate(theta, offset, temp)
    trace = [TraceEntry(0, theta, offset, f, temp)]
    evaluations = 1
    velocity = np.zeros(2)
    plateau = 0
    for it in range(1, cfg.max_iters + 1):
        velocity = cfg.momentum * velocity + g
        theta, offset, mirrored = wrap_pose(theta + lr[0] * velocity[0], offset + lr[1] * velocity[1], spacing)
        if mirrored:
            velocity[1] = -velocity[1]
        temp = temperature_at(cfg.schedule, it) if cfg.schedule else final_temp
        f_prev = f
        f, g = evaluate(theta, offset, temp)
        evaluations += 1
        trace.append(TraceEntry(it, theta, offset, f, temp))
        plateau = plateau + 1 if abs(f - f_prev) < cfg.tol else 0
        if plateau >= PLATEAU_ITERS:
            break

    stale = [k for k, t in enumerate(trace) if t.temperature != final_temp]
    finals = np.array([t.fitness for t in trace])
    if stale:
        rescored = evaluate_batch(
            W,
            B,
            [trace[k].theta for k in stale],
            [trace[k].offset for k in stale],
            spacing,
            params.with_temperature(final_temp),
        ).fitness
        finals[stale] = rescored
        evaluations += len(stale)
    i = pick_best(finals)
    return OptimumReport(trace[i].theta, trace[i].offset, float(finals[i]), trace, evaluations)


def hybrid(poly: NormalizedPolygon, field: TransectField, params: ScoreParams, cfg: OptimizerConfig) -> OptimumReport:
    """Lattice scan, then gradient ascent started from the lattice winner."""
    coarse = grid_search(poly, field, params, cfg)
    if cfg.max_iters == 0:
        return coarse
    fine = gradient_ascent(poly, field, params, cfg, (coarse.best_theta, coarse.best_offset))
    best = fine if fine.best_fitness > coarse.best_fitness else coarse
    return OptimumReport(
        best.best_theta,
        best.best_offset,
        best.best_fitness,
        coarse.trace + fine.trace,
        coarse.evaluations + fine.evaluations,
    )


def random_init(spacing: float, seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    return float(rng.uniform(0, math.pi)), float(rng.uniform(-spacing / 2, spacing / 2))


def optimize(
    poly: NormalizedPolygon,
    field: TransectField,
    params: ScoreParams,
    cfg: OptimizerConfig,
    init: tuple[float, float] | None = None,
) -> OptimumReport:
    """Dispatch on ``cfg.mode``; plain ``gd`` starts from a seeded random pose."""
    if cfg.mode == "grid":
        return grid_search(poly, field, params, cfg)
    if cfg.mode == "hybrid":
        return hybrid(poly, field, params, cfg)
    if init is None:
        init = random_init(field.spacing, cfg.seed)
    return gradient_ascent(poly, field, params, cfg, init)
