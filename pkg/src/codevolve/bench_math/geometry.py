"""Verifiers for packing and point-configuration problems.

Real-valued checks use an absolute tolerance ``TOL`` on distances and areas
so certificates sitting exactly on a constraint do not flip on rounding.
The kissing check is exact integer arithmetic.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

TOL = 1e-9


class ZeroPoint(ValueError):
    pass


class DuplicatePoints(ValueError):
    pass


class OutsideRegion(ValueError):
    pass


class CollinearAll(ValueError):
    pass


# -- kissing ------------------------------------------------------------------


def verify_kissing(points: Sequence[Sequence[int]]) -> dict:
    """Integer-point kissing certificate: min pairwise dist² >= max norm², 0 excluded."""
    pts = [tuple(int(c) for c in p) for p in points]
    if not pts:
        return {"valid": False, "count": 0}
    if len({len(p) for p in pts}) != 1:
        raise ValueError("points must share one dimension")
    if any(not any(p) for p in pts):
        raise ZeroPoint("configuration contains the origin")
    small = max(abs(c) for p in pts for c in p) < (1 << 20)
    x = np.array(pts, dtype=np.int64 if small else object)
    norms = (x * x).sum(axis=1)
    gram = x @ x.T
    d2 = norms[:, None] + norms[None, :] - 2 * gram
    n = len(pts)
    iu = np.triu_indices(n, 1)
    min_d2 = int(min(d2[iu])) if n > 1 else None
    max_n2 = int(max(norms))
    valid = n == 1 or min_d2 >= max_n2
    return {"valid": bool(valid), "count": n, "min_dist2": min_d2, "max_norm2": max_n2}


# -- circles --------------------------------------------------------------------


def verify_circle_packing(circles: Sequence[tuple[float, float, float]], width: float = 1.0,
                          height: float | None = None, tol: float = TOL) -> dict:
    """Disjoint circles ``(x, y, r)`` inside ``[0, width] x [0, height]``.

    The default container is the unit square; for the perimeter-4 rectangle
    pass ``width`` and leave ``height`` as ``2 - width``.
    """
    if height is None:
        height = 1.0 if width == 1.0 else 2.0 - width
    c = np.asarray(circles, dtype=float).reshape(-1, 3)
    if np.any(c[:, 2] <= 0):
        raise ValueError("radii must be positive")
    x, y, r = c[:, 0], c[:, 1], c[:, 2]
    inside = bool(np.all(x - r >= -tol) and np.all(x + r <= width + tol)
                  and np.all(y - r >= -tol) and np.all(y + r <= height + tol))
    disjoint = True
    if len(c) > 1:
        i, j = np.triu_indices(len(c), 1)
        dist = np.hypot(x[i] - x[j], y[i] - y[j])
        disjoint = bool(np.all(dist >= r[i] + r[j] - tol))
    return {"valid": inside and disjoint, "sum_radii": float(r.sum()),
            "width": width, "height": height}


# -- convex polygons ------------------------------------------------------------


def regular_hexagon(center: Sequence[float], rotation: float = 0.0, side: float = 1.0) -> np.ndarray:
    k = np.arange(6)
    ang = rotation + k * math.pi / 3
    return np.column_stack([center[0] + side * np.cos(ang), center[1] + side * np.sin(ang)])


def _axes(poly: np.ndarray) -> np.ndarray:
    edges = np.roll(poly, -1, axis=0) - poly
    normals = np.column_stack([-edges[:, 1], edges[:, 0]])
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def polygons_overlap(a: np.ndarray, b: np.ndarray, tol: float = TOL) -> bool:
    """Separating-axis test for convex polygons; touching within ``tol`` is not overlap."""
    for axis in np.vstack([_axes(a), _axes(b)]):
        pa, pb = a @ axis, b @ axis
        if pa.max() <= pb.min() + tol or pb.max() <= pa.min() + tol:
            return False
    return True


def polygon_contains(outer: np.ndarray, pts: np.ndarray, tol: float = TOL) -> bool:
    """All ``pts`` inside the convex counter-clockwise polygon ``outer`` (within ``tol``)."""
    for k in range(len(outer)):
        a, b = outer[k], outer[(k + 1) % len(outer)]
        edge = b - a
        cross = edge[0] * (pts[:, 1] - a[1]) - edge[1] * (pts[:, 0] - a[0])
        if np.any(cross / np.hypot(*edge) < -tol):
            return False
    return True


def verify_hexagon_packing(hexes: Sequence[tuple[float, float, float]], side: float,
                           tol: float = TOL) -> dict:
    """Unit hexagons ``(x, y, rotation)`` inside a regular hexagon of side ``side`` at the origin."""
    if side <= 0 or not hexes:
        raise ValueError("need at least one hexagon and a positive outer side")
    outer = regular_hexagon((0.0, 0.0), 0.0, side)
    polys = [regular_hexagon((h[0], h[1]), h[2]) for h in hexes]
    contained = all(polygon_contains(outer, p, tol) for p in polys)
    disjoint = not any(polygons_overlap(p, q, tol) for p, q in itertools.combinations(polys, 2))
    return {"valid": contained and disjoint, "count": len(polys), "side": side}


# -- distance ratio ---------------------------------------------------------------


def ratio_objective(points: Sequence[Sequence[float]]) -> float:
    """Squared ratio of the largest to the smallest pairwise distance."""
    x = np.asarray(points, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two points")
    i, j = np.triu_indices(len(x), 1)
    d2 = ((x[i] - x[j]) ** 2).sum(axis=1)
    if d2.min() <= 0:
        raise DuplicatePoints("two points coincide")
    return float(d2.max() / d2.min())


# -- Heilbronn --------------------------------------------------------------------

UNIT_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


def triangle_areas(x: np.ndarray) -> np.ndarray:
    idx = np.array(list(itertools.combinations(range(len(x)), 3)))
    a, b, c = x[idx[:, 0]], x[idx[:, 1]], x[idx[:, 2]]
    return 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices (Andrew's monotone chain)."""
    pts = sorted(map(tuple, np.asarray(points, dtype=float)))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def heilbronn_objective(points: Sequence[Sequence[float]], variant: str = "triangle",
                        triangle: np.ndarray | None = None, tol: float = TOL) -> float:
    """Smallest triangle area, normalized to a unit-area region.

    ``triangle``: points must lie in the reference triangle (equilateral with
    unit side by default); areas are divided by its area. ``convex``: areas
    are divided by the convex hull area of the points themselves.
    """
    x = np.asarray(points, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least three points")
    smallest = float(triangle_areas(x).min())
    if variant == "triangle":
        tri = UNIT_TRIANGLE if triangle is None else np.asarray(triangle, dtype=float)
        hull = convex_hull(tri)
        if not polygon_contains(hull, x, tol):
            raise OutsideRegion("a point lies outside the reference triangle")
        return smallest / polygon_area(hull)
    if variant == "convex":
        area = polygon_area(convex_hull(x))
        if area <= tol:
            raise CollinearAll("points span no area")
        return smallest / area
    raise ValueError(f"unknown variant {variant!r}")
