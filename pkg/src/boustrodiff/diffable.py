"""Sigmoid relaxation of the transect fitness and its exact gradient.

Point membership is a product of per-edge sigmoids, re-sharpened by an outer
sigmoid; chord lengths are trapezoid integrals of that indicator along each
line; empty lines are down-weighted by a soft "shown" indicator.  Every step
is smooth, so the fitness has derivatives in the rotation angle and the
lateral offset of the transect field.

Derivatives are propagated by hand (forward mode over the two parameters),
vectorized over a batch of (theta, offset) pairs.  They are exact for the
implemented composition, quadrature included.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .discrete import ScoreParams, ScoreReport, TransectField, wrap_offset
from .errors import BadPPT, NonPositiveTemperature
from .geometry import EdgeHalfPlane, NormalizedPolygon, edge_arrays

EPS = 1e-8
# upper bound on elements of a (batch, lines, ppt, edges) block
_BLOCK_ELEMENTS = 2_000_000


def _check_temperature(temperature: float) -> None:
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be positive, got {temperature}")


def _sigmoid(z):
    # two-branch form: exp only ever sees a non-positive argument
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def stable_sigmoid(v, temperature: float):
    """``1 / (1 + exp(-v * temperature))`` without overflow."""
    _check_temperature(temperature)
    out = _sigmoid(np.asarray(v, dtype=float) * temperature)
    return float(out) if out.ndim == 0 else out


def polygon_indicator(X, edges: Sequence[EdgeHalfPlane], temperature: float):
    """Soft membership of ``X`` (shape (..., 2)) in the polygon, in (0, 1)."""
    _check_temperature(temperature)
    W, B = edge_arrays(edges)
    X = np.asarray(X, dtype=float)
    v = X[..., None, 0] * W[:, 0] + X[..., None, 1] * W[:, 1] + B
    inner = _sigmoid(temperature * v).prod(axis=-1)
    out = _sigmoid(temperature * (inner - 0.5))
    return float(out) if out.ndim == 0 else out


def trapezoid_weights(ppt: int) -> np.ndarray:
    if int(ppt) != ppt or ppt < 2:
        raise BadPPT(f"points per transect must be an integer >= 2, got {ppt}")
    w = np.full(int(ppt), 1.0 / (ppt - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def transect_length(x: float, edges: Sequence[EdgeHalfPlane], temperature: float, ppt: int) -> float:
    """Trapezoid estimate of the indicator integral along ``y`` in [-0.5, 0.5]."""
    w = trapezoid_weights(ppt)
    y = np.linspace(-0.5, 0.5, int(ppt))
    pts = np.column_stack([np.full_like(y, x), y])
    return float((polygon_indicator(pts, edges, temperature) * w).sum())


def _shown(z):
    # (sigmoid(z) - 0.5) / 0.5 == tanh(z / 2); tanh keeps tiny lengths nonzero
    return np.tanh(0.5 * z)


def shown_indicator(length, temperature: float):
    """Rescaled sigmoid ``(sigmoid(T * l) - 0.5) / 0.5`` of a length.

    Zero exactly at zero length, saturating towards 1.
    """
    _check_temperature(temperature)
    out = _shown(np.asarray(length, dtype=float) * temperature)
    return float(out) if out.ndim == 0 else out


@dataclass
class DiffScoreReport(ScoreReport):
    soft_shown: list[float] = field(default_factory=list)
    gradient: tuple[float, float] | None = None
    temperature_used: float = 0.0

    def to_json(self) -> dict:
        out = super().to_json()
        out["soft_shown"] = list(self.soft_shown)
        out["temperature_used"] = self.temperature_used
        if self.gradient is not None:
            out["gradient"] = {"d_theta": self.gradient[0], "d_x_offset": self.gradient[1]}
        return out


@dataclass
class _Batch:
    fitness: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    lengths: np.ndarray
    shown: np.ndarray
    d_theta: np.ndarray | None = None
    d_offset: np.ndarray | None = None


def _evaluate_block(W, B, thetas, offsets, indices, spacing, params: ScoreParams, want_grad: bool) -> _Batch:
    T = float(params.temperature)
    ppt = int(params.ppt)
    c, s = np.cos(thetas), np.sin(thetas)
    # rotated normals, shape (P, K); d/dtheta of (wx, wy) is (-wy, wx)
    wx = c[:, None] * W[None, :, 0] - s[:, None] * W[None, :, 1]
    wy = s[:, None] * W[None, :, 0] + c[:, None] * W[None, :, 1]
    x = indices[None, :] * spacing + offsets[:, None]  # (P, L)
    y = np.linspace(-0.5, 0.5, ppt)
    tw = trapezoid_weights(ppt)

    # (P, L, M, K)
    v = (
        wx[:, None, None, :] * x[:, :, None, None]
        + wy[:, None, None, :] * y[None, None, :, None]
        + B[None, None, None, :]
    )
    u = T * v
    edge_sig = _sigmoid(u)
    prod = edge_sig.prod(axis=-1)  # (P, L, M)
    ind = _sigmoid(T * (prod - 0.5))
    lengths = (ind * tw).sum(axis=-1)  # (P, L)

    shown = _shown(T * lengths)
    count = shown.sum(axis=-1)
    denom = count + EPS
    mean = (shown * lengths).sum(axis=-1) / denom
    dev = lengths - mean[:, None]
    var = (shown * dev * dev).sum(axis=-1) / denom
    std = np.sqrt(var)
    fitness = params.a * mean + params.b * (1.0 - std)
    out = _Batch(fitness, mean, std, lengths, shown)
    if not want_grad:
        return out

    # d log(sigma(u)) / du = 1 - sigma(u) = sigma(-u)
    g = T * _sigmoid(-u)
    dv_theta = -wy[:, None, None, :] * x[:, :, None, None] + wx[:, None, None, :] * y[None, None, :, None]
    dprod_theta = prod * (g * dv_theta).sum(axis=-1)
    dprod_off = prod * (g * wx[:, None, None, :]).sum(axis=-1)
    dind = T * ind * _sigmoid(-T * (prod - 0.5))
    dl = np.stack([(dind * dprod_theta * tw).sum(axis=-1), (dind * dprod_off * tw).sum(axis=-1)])  # (2, P, L)

    dshown = 0.5 * T * (1.0 - shown * shown)  # d shown / d length
    ds = dshown[None] * dl
    dcount = ds.sum(axis=-1)
    dmean = ((ds * lengths[None] + shown[None] * dl).sum(axis=-1) - mean[None] * dcount) / denom[None]
    dvar_num = (ds * dev[None] ** 2 + 2.0 * shown[None] * dev[None] * (dl - dmean[..., None])).sum(axis=-1)
    dvar = (dvar_num - var[None] * dcount) / denom[None]
    # sqrt is not differentiable at 0; take the zero subgradient there
    with np.errstate(divide="ignore", invalid="ignore"):
        dstd = np.where(std[None] > 0, dvar / (2.0 * std[None]), 0.0)
    dfit = params.a * dmean - params.b * dstd
    out.d_theta, out.d_offset = dfit[0], dfit[1]
    return out


def evaluate_batch(
    W: np.ndarray,
    B: np.ndarray,
    thetas,
    offsets,
    spacing: float,
    params: ScoreParams,
    want_grad: bool = False,
) -> _Batch:
    """Soft fitness for many (theta, offset) pairs on one polygon.

    Offsets are wrapped into ``[-spacing/2, spacing/2)`` first; the work is
    split into fixed-size blocks so results do not depend on batch size.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    thetas, offsets = np.broadcast_arrays(thetas, offsets)
    offsets = np.array([wrap_offset(o, spacing) for o in offsets])
    indices = TransectField(spacing).indices.astype(float)
    per_item = max(1, len(indices) * int(params.ppt) * max(1, len(B)))
    step = max(1, _BLOCK_ELEMENTS // per_item)
    blocks = [
        _evaluate_block(W, B, thetas[i : i + step], offsets[i : i + step], indices, spacing, params, want_grad)
        for i in range(0, len(thetas), step)
    ]
    if len(blocks) == 1:
        return blocks[0]
    cat = lambda name: (  # noqa: E731
        None if getattr(blocks[0], name) is None else np.concatenate([getattr(b, name) for b in blocks])
    )
    return _Batch(*(cat(n) for n in ("fitness", "mean", "std", "lengths", "shown", "d_theta", "d_offset")))


def _report(batch: _Batch, i: int, params: ScoreParams, with_grad: bool) -> DiffScoreReport:
    grad = None
    if with_grad:
        grad = (float(batch.d_theta[i]), float(batch.d_offset[i]))
    shown = batch.shown[i]
    return DiffScoreReport(
        mean_length=float(batch.mean[i]),
        std_length=float(batch.std[i]),
        fitness=float(batch.fitness[i]),
        transect_lengths=batch.lengths[i].tolist(),
        shown_count=float(shown.sum()),
        soft_shown=shown.tolist(),
        gradient=grad,
        temperature_used=float(params.temperature),
    )


def soft_score(edges: Sequence[EdgeHalfPlane], field: TransectField, params: ScoreParams) -> DiffScoreReport:
    """Relaxed fitness of ``edges`` (already in the desired orientation)."""
    W, B = edge_arrays(edges)
    batch = evaluate_batch(W, B, 0.0, field.x_offset, field.spacing, params)
    return _report(batch, 0, params, with_grad=False)


def score_and_gradient(
    poly: NormalizedPolygon,
    theta: float,
    x_offset: float,
    field: TransectField,
    params: ScoreParams,
) -> DiffScoreReport:
    """Relaxed fitness at (theta, x_offset) with its two partial derivatives.

    The polygon is rotated by ``theta`` rather than the transects; the
    field's own offset is ignored in favour of ``x_offset``.
    """
    W, B = poly.edge_arrays()
    batch = evaluate_batch(W, B, theta, x_offset, field.spacing, params, want_grad=True)
    return _report(batch, 0, params, with_grad=True)


def soft_fitness(poly: NormalizedPolygon, theta: float, x_offset: float, spacing: float, params: ScoreParams) -> float:
    W, B = poly.edge_arrays()
    return float(evaluate_batch(W, B, theta, x_offset, spacing, params).fitness[0])


def finite_difference_gradient(
    poly: NormalizedPolygon, theta: float, x_offset: float, spacing: float, params: ScoreParams, step: float = 1e-5
) -> tuple[float, float]:
    """Central differences of the relaxed fitness; an independent check only."""
    f = lambda t, o: soft_fitness(poly, t, o, spacing, params)  # noqa: E731
    d_theta = (f(theta + step, x_offset) - f(theta - step, x_offset)) / (2 * step)
    d_off = (f(theta, x_offset + step) - f(theta, x_offset - step)) / (2 * step)
    return d_theta, d_off


__all__ = [
    "DiffScoreReport",
    "EPS",
    "evaluate_batch",
    "finite_difference_gradient",
    "polygon_indicator",
    "score_and_gradient",
    "shown_indicator",
    "soft_fitness",
    "soft_score",
    "stable_sigmoid",
    "transect_length",
    "trapezoid_weights",
]
