"""Convex polygon handling: validation, unit-frame normalization, half-planes.

A polygon is carried through the rest of the package as a list of oriented
half-planes ``W . X + B >= 0`` in a "unit frame" where its minimum enclosing
circle is centred on the origin with radius 0.5.  Rotating the polygon then
only touches ``W``, which is what makes the angle differentiable cheaply.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateVertex, EmptyInput, NonConvex, NotEnoughVertices

Point = tuple[float, float]

UNIT_RADIUS = 0.5
_DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class ValidatedPolygon:
    """Strictly convex polygon, counter-clockwise, in user units."""

    vertices: tuple[Point, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def to_json(self) -> dict:
        return {"vertices": [[x, y] for x, y in self.vertices]}


@dataclass(frozen=True)
class EdgeHalfPlane:
    """Half-plane ``W . X + B >= 0``; interior points evaluate positive."""

    W: tuple[float, float]
    B: float

    def evaluate(self, point: Sequence[float]) -> float:
        return self.W[0] * point[0] + self.W[1] * point[1] + self.B


@dataclass(frozen=True)
class InverseTransform:
    """Maps unit-frame points back to user coordinates: ``center + scale * X``."""

    center: Point
    scale: float

    def to_user(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.asarray(self.center) + self.scale * pts

    def to_unit(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts - np.asarray(self.center)) / self.scale


@dataclass(frozen=True)
class NormalizedPolygon:
    edges: tuple[EdgeHalfPlane, ...]
    inverse_transform: InverseTransform
    vertices: tuple[Point, ...]
    enclosing_radius: float = UNIT_RADIUS

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return edge_arrays(self.edges)


def edge_arrays(edges: Sequence[EdgeHalfPlane]) -> tuple[np.ndarray, np.ndarray]:
    """Stack edges into ``W`` of shape (K, 2) and ``B`` of shape (K,)."""
    W = np.array([e.W for e in edges], dtype=float).reshape(-1, 2)
    B = np.array([e.B for e in edges], dtype=float)
    return W, B


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def signed_area(vertices: Sequence[Point]) -> float:
    n = len(vertices)
    total = 0.0
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return 0.5 * total


def validate(vertices: Sequence[Sequence[float]]) -> ValidatedPolygon:
    """Check convexity and return the polygon wound counter-clockwise.

    Clockwise input is reversed rather than rejected.  Collinear triples,
    repeated points and self-intersecting (star) outlines are refused.
    """
    pts = [(float(v[0]), float(v[1])) for v in vertices]
    if len(pts) < 3:
        raise NotEnoughVertices(f"polygon needs at least 3 vertices, got {len(pts)}")
    if not all(math.isfinite(c) for p in pts for c in p):
        raise DegenerateVertex("polygon vertices must be finite numbers")

    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if math.dist(pts[i], pts[j]) <= _DUPLICATE_TOL:
                raise DegenerateVertex(f"vertices {i} and {j} coincide at {pts[i]}")

    if signed_area(pts) < 0:
        pts.reverse()

    n = len(pts)
    turning = 0.0
    for i in range(n):
        a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
        cross = _cross(a, b, c)
        if not cross > 0:
            raise NonConvex(f"vertex {i} at {b} makes a non-left turn (cross product {cross:.3g})")
        e1 = (b[0] - a[0], b[1] - a[1])
        e2 = (c[0] - b[0], c[1] - b[1])
        turning += math.atan2(cross, e1[0] * e2[0] + e1[1] * e2[1])
    # a pentagram has all-positive turns but winds twice
    if abs(turning - 2 * math.pi) > 1e-6:
        raise NonConvex("polygon outline self-intersects")
    return ValidatedPolygon(tuple(pts))


# Smallest enclosing circle, incremental Welzl-style construction.
# Circles are (cx, cy, r) triples.

_MULTIPLICATIVE_EPS = 1 + 1e-14


def _in_circle(c, p) -> bool:
    return math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * _MULTIPLICATIVE_EPS


def _diameter_circle(a, b):
    cx = (a[0] + b[0]) / 2
    cy = (a[1] + b[1]) / 2
    return (cx, cy, max(math.hypot(cx - a[0], cy - a[1]), math.hypot(cx - b[0], cy - b[1])))


def _circumcircle(a, b, c):
    ox = (min(a[0], b[0], c[0]) + max(a[0], b[0], c[0])) / 2
    oy = (min(a[1], b[1], c[1]) + max(a[1], b[1], c[1])) / 2
    ax, ay = a[0] - ox, a[1] - oy
    bx, by = b[0] - ox, b[1] - oy
    cx, cy = c[0] - ox, c[1] - oy
    d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2
    if d == 0:
        return None
    x = ox + ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    y = oy + ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    r = max(math.hypot(x - p[0], y - p[1]) for p in (a, b, c))
    return (x, y, r)


def _circle_two_points(points, p, q):
    circ = _diameter_circle(p, q)
    left = right = None
    px, py = p
    qx, qy = q
    for r in points:
        if _in_circle(circ, r):
            continue
        cross = _cross(p, q, r)
        c = _circumcircle(p, q, r)
        if c is None:
            continue
        side = _cross(p, q, (c[0], c[1]))
        if cross > 0 and (left is None or side > _cross(p, q, (left[0], left[1]))):
            left = c
        elif cross < 0 and (right is None or side < _cross(p, q, (right[0], right[1]))):
            right = c
    if left is None and right is None:
        return circ
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def _circle_one_point(points, p):
    c = (p[0], p[1], 0.0)
    for i, q in enumerate(points):
        if not _in_circle(c, q):
            if c[2] == 0.0:
                c = _diameter_circle(p, q)
            else:
                c = _circle_two_points(points[: i + 1], p, q)
    return c


def min_enclosing_circle(points: Sequence[Sequence[float]]) -> tuple[Point, float]:
    """Smallest circle containing ``points``; returns ``(center, radius)``.

    Expected linear time.  The processing order is shuffled with a fixed seed
    so repeated calls give bitwise-identical circles.
    """
    pts = [(float(p[0]), float(p[1])) for p in points]
    if not pts:
        raise EmptyInput("cannot enclose an empty point set")
    random.Random(0).shuffle(pts)
    c = None
    for i, p in enumerate(pts):
        if c is None or not _in_circle(c, p):
            c = _circle_one_point(pts[: i + 1], p)
    return (c[0], c[1]), c[2]


def edge_from_points(p1: Sequence[float], p2: Sequence[float], interior: Sequence[float]) -> EdgeHalfPlane:
    """Unit-normal half-plane through ``p1`` and ``p2`` with ``interior`` on the positive side."""
    x1, y1 = float(p1[0]), float(p1[1])
    x2, y2 = float(p2[0]), float(p2[1])
    wx, wy = y1 - y2, x2 - x1
    b = x1 * y2 - x2 * y1
    if wx * interior[0] + wy * interior[1] + b < 0:
        wx, wy, b = -wx, -wy, -b
    norm = math.hypot(wx, wy)
    return EdgeHalfPlane((wx / norm + 0.0, wy / norm + 0.0), b / norm + 0.0)


def normalize(poly: ValidatedPolygon) -> NormalizedPolygon:
    """Centre the enclosing circle on the origin and scale it to radius 0.5."""
    center, radius = min_enclosing_circle(poly.vertices)
    inv = InverseTransform(center, radius / UNIT_RADIUS)
    unit = inv.to_unit(poly.vertices)
    centroid = unit.mean(axis=0)
    verts = tuple((float(x), float(y)) for x, y in unit)
    n = len(verts)
    edges = tuple(edge_from_points(verts[i], verts[(i + 1) % n], centroid) for i in range(n))
    return NormalizedPolygon(edges=edges, inverse_transform=inv, vertices=verts)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate(edges: Sequence[EdgeHalfPlane], theta: float) -> list[EdgeHalfPlane]:
    """Edges of the polygon rotated by ``theta`` about the origin.

    ``X`` is inside the rotated polygon iff ``R(-theta) X`` is inside the
    original, so ``W' = R(theta) W`` while ``B`` is unchanged.
    """
    c, s = math.cos(theta), math.sin(theta)
    return [EdgeHalfPlane((c * e.W[0] - s * e.W[1], s * e.W[0] + c * e.W[1]), e.B) for e in edges]


def load_polygon_json(obj: dict) -> ValidatedPolygon:
    if not isinstance(obj, dict) or "vertices" not in obj:
        raise DegenerateVertex('polygon JSON must be an object with a "vertices" list')
    try:
        verts = [(float(v[0]), float(v[1])) for v in obj["vertices"]]
    except (TypeError, ValueError, IndexError) as exc:
        raise DegenerateVertex(f"malformed vertex list: {exc}") from None
    return validate(verts)
