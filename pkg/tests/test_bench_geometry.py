from __future__ import annotations

import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import Polygon

from codevolve.bench_math.geometry import (
    UNIT_TRIANGLE,
    CollinearAll,
    DuplicatePoints,
    OutsideRegion,
    ZeroPoint,
    convex_hull,
    heilbronn_objective,
    polygon_area,
    polygons_overlap,
    ratio_objective,
    regular_hexagon,
    verify_circle_packing,
    verify_hexagon_packing,
    verify_kissing,
)

SQ3 = math.sqrt(3)


def d4_roots():
    pts = []
    for i, j in itertools.combinations(range(4), 2):
        for si, sj in itertools.product((1, -1), repeat=2):
            v = [0] * 4
            v[i], v[j] = si, sj
            pts.append(v)
    return pts


def unit_vectors(d):
    return [[s * (k == i) for k in range(d)] for i in range(d) for s in (1, -1)]


def kissing_oracle(pts):
    n2 = [sum(c * c for c in p) for p in pts]
    d2 = [sum((a - b) ** 2 for a, b in zip(p, q)) for p, q in itertools.combinations(pts, 2)]
    return min(d2) >= max(n2)


# -- kissing --------------------------------------------------------------------


def test_d4_root_system():
    res = verify_kissing(d4_roots())
    assert res == {"valid": True, "count": 24, "min_dist2": 2, "max_norm2": 2}


@pytest.mark.parametrize("d", range(2, 12))
def test_unit_vectors(d):
    res = verify_kissing(unit_vectors(d))
    assert res["valid"] and res["count"] == 2 * d


def test_perturbations_rejected():
    pts = d4_roots()
    assert not verify_kissing(pts + [[1, 0, 0, 0]])["valid"]
    assert not verify_kissing([[2, 1, 0, 0]] + pts[1:])["valid"]
    assert not verify_kissing(pts + [pts[3]])["valid"]
    with pytest.raises(ZeroPoint):
        verify_kissing(pts + [[0, 0, 0, 0]])


def test_scaling_and_huge_coordinates():
    big = [[c * (1 << 40) for c in p] for p in d4_roots()]
    assert verify_kissing(big)["valid"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3).filter(any), min_size=2, max_size=12))
def test_kissing_matches_oracle(pts):
    assert verify_kissing(pts)["valid"] == kissing_oracle(pts)


@settings(max_examples=50, deadline=None)
@given(st.permutations(range(4)), st.lists(st.sampled_from((1, -1)), min_size=4, max_size=4))
def test_kissing_symmetry_invariance(perm, signs):
    moved = [[signs[k] * p[perm[k]] for k in range(4)] for p in d4_roots()]
    assert verify_kissing(moved) == verify_kissing(d4_roots())


# -- circles ----------------------------------------------------------------------


def test_four_circles_in_square():
    c = [(0.25, 0.25, 0.25), (0.75, 0.25, 0.25), (0.25, 0.75, 0.25), (0.75, 0.75, 0.25)]
    res = verify_circle_packing(c)
    assert res["valid"] and res["sum_radii"] == pytest.approx(1.0)
    nudged = c[:1] + [(0.75 - 1e-6, 0.25, 0.25)] + c[2:]
    assert not verify_circle_packing(nudged)["valid"]
    assert verify_circle_packing(c[:1] + [(0.75 - 1e-11, 0.25, 0.25)] + c[2:])["valid"]
    assert not verify_circle_packing([(0.2, 0.5, 0.25)])["valid"]


def test_rectangle_container():
    res = verify_circle_packing([(0.25, 0.25, 0.25), (0.25, 1.25, 0.25)], width=0.5)
    assert res["valid"] and res["height"] == pytest.approx(1.5)
    assert not verify_circle_packing([(0.25, 1.3, 0.25)], width=0.5)["valid"]
    with pytest.raises(ValueError):
        verify_circle_packing([(0.5, 0.5, 0.0)])


# -- hexagons -----------------------------------------------------------------------


def test_touching_neighbours():
    assert verify_hexagon_packing([(0, 0, 0), (0, SQ3, 0)], side=5)["valid"]
    assert not verify_hexagon_packing([(0, 0, 0), (0, SQ3 - 1e-6, 0)], side=5)["valid"]


def test_flower_fits_side_three():
    flower = [(0.0, 0.0, 0.0)] + [
        (SQ3 * math.cos(a), SQ3 * math.sin(a), 0.0) for a in np.radians(30 + 60 * np.arange(6))
    ]
    assert verify_hexagon_packing(flower, side=3)["valid"]
    assert not verify_hexagon_packing(flower, side=2.999)["valid"]
    rotated = [(x, y, math.pi / 6) for x, y, _ in flower]
    assert not verify_hexagon_packing(rotated, side=3)["valid"]


def test_overlap_matches_shapely():
    rng = random.Random(3)
    checked = 0
    for _ in range(400):
        a = regular_hexagon((0, 0), rng.uniform(0, math.pi))
        b = regular_hexagon((rng.uniform(-2.2, 2.2), rng.uniform(-2.2, 2.2)), rng.uniform(0, math.pi))
        area = Polygon(a).intersection(Polygon(b)).area
        if 0 < area < 1e-6 or (area == 0 and Polygon(a).distance(Polygon(b)) < 1e-6):
            continue  # too close to call
        assert polygons_overlap(a, b) == (area > 0)
        checked += 1
    assert checked > 300


# -- ratio and Heilbronn ------------------------------------------------------------


def test_ratio():
    assert ratio_objective(UNIT_TRIANGLE) == pytest.approx(1.0)
    assert ratio_objective([(0, 0), (1, 0), (1, 1), (0, 1)]) == pytest.approx(2.0)
    with pytest.raises(DuplicatePoints):
        ratio_objective([(0, 0), (1, 0), (0, 0)])


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 2 * math.pi), st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_ratio_similarity_invariant(scale, angle, shift):
    pts = np.random.default_rng(0).random((8, 3))
    rot = np.array([[math.cos(angle), -math.sin(angle), 0], [math.sin(angle), math.cos(angle), 0], [0, 0, 1]])
    moved = scale * pts @ rot.T + np.array(shift + [0.0])
    assert ratio_objective(moved) == pytest.approx(ratio_objective(pts), rel=1e-9)


def test_heilbronn_reference_triangle():
    assert heilbronn_objective(UNIT_TRIANGLE) == pytest.approx(1.0)
    assert heilbronn_objective(UNIT_TRIANGLE, "convex") == pytest.approx(1.0)
    mids = [(0.5, 0.0), (0.25, SQ3 / 4), (0.75, SQ3 / 4)]
    assert heilbronn_objective(list(UNIT_TRIANGLE) + mids) == 0.0
    with pytest.raises(OutsideRegion):
        heilbronn_objective([(0, 0), (1, 0), (0.5, 0.9)])
    with pytest.raises(CollinearAll):
        heilbronn_objective([(0, 0), (1, 1), (2, 2), (3, 3)], "convex")


def heilbronn_oracle(pts, region_area):
    best = math.inf
    for a, b, c in itertools.combinations(pts, 3):
        best = min(best, abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2)
    return best / region_area


def random_in_triangle(rng, n):
    out = []
    for _ in range(n):
        r1, r2 = rng.random(), rng.random()
        if r1 + r2 > 1:
            r1, r2 = 1 - r1, 1 - r2
        out.append(tuple(UNIT_TRIANGLE[0] + r1 * (UNIT_TRIANGLE[1] - UNIT_TRIANGLE[0])
                         + r2 * (UNIT_TRIANGLE[2] - UNIT_TRIANGLE[0])))
    return out


def test_heilbronn_matches_oracle():
    rng = random.Random(8)
    for _ in range(30):
        pts = random_in_triangle(rng, rng.randrange(3, 12))
        assert heilbronn_objective(pts) == pytest.approx(heilbronn_oracle(pts, SQ3 / 4), rel=1e-9)
        hull = Polygon(pts).convex_hull.area
        assert heilbronn_objective(pts, "convex") == pytest.approx(heilbronn_oracle(pts, hull), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 4), st.randoms(use_true_random=False))
def test_convex_variant_affine_and_order_invariant(shear, stretch, rnd):
    pts = np.random.default_rng(1).random((9, 2))
    base = heilbronn_objective(pts, "convex")
    moved = pts @ np.array([[1.0, shear], [0.0, stretch]]).T
    order = list(range(9))
    rnd.shuffle(order)
    assert heilbronn_objective(moved[order], "convex") == pytest.approx(base, rel=1e-7)


def test_hull_area():
    square = np.array([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5), (0.5, 0)])
    hull = convex_hull(square)
    assert len(hull) == 4 and polygon_area(hull) == pytest.approx(1.0)
