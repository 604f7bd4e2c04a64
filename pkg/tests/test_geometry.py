from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from blackwell_kit.game_core import load_bundled
from blackwell_kit.geometry import (PayoffPolytope, clip_below, contains, contains_by_vertices, dimension,
                                    feasible_set, hausdorff_2d, intersect_halfspaces, polygon_vertices_close,
                                    support_value)

coords = st.integers(-20, 20)
point_sets = st.lists(st.tuples(coords, coords), min_size=3, max_size=12, unique=True)


def _general_position(pts):
    a = np.asarray(pts, float)
    return np.linalg.matrix_rank(a[1:] - a[0]) == 2


@given(point_sets)
def test_hull_vertices_match_qhull(pts):
    if not _general_position(pts):
        return
    poly = PayoffPolytope.from_points([tuple(Fraction(x) for x in p) for p in pts])
    ref = ConvexHull(np.asarray(pts, float))
    want = {tuple(pts[k]) for k in ref.vertices}
    assert {tuple(int(c) for c in v) for v in poly.vertices} == want
    assert poly.exact
    # counter-clockwise order: positive signed area equal to qhull's volume
    v = poly.float_vertices()
    area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    assert area == pytest.approx(ref.volume)


@given(point_sets, st.tuples(coords, coords))
def test_membership_routes_agree(pts, q):
    poly = PayoffPolytope.from_points([tuple(Fraction(x) for x in p) for p in pts])
    q = tuple(Fraction(x) for x in q)
    assert contains(poly, q) == contains_by_vertices(poly, q)


@given(point_sets, st.tuples(coords, coords))
def test_support_value_bounds_members(pts, lam):
    if lam == (0, 0):
        return
    poly = PayoffPolytope.from_points(pts)
    h = support_value(poly, lam)
    assert h == pytest.approx(max(lam[0] * p[0] + lam[1] * p[1] for p in pts))


def test_degenerate_hulls_have_lower_dimension():
    seg = PayoffPolytope.from_points([(0, 0), (1, 1), (2, 2)])
    assert dimension(seg) == 1 and len(seg.vertices) == 2
    pt = PayoffPolytope.from_points([(1, 2), (1, 2)])
    assert dimension(pt) == 0
    assert dimension(PayoffPolytope.empty_set(2)) == -1
    assert contains(seg, (Fraction(1, 2), Fraction(1, 2)))
    assert not contains(seg, (Fraction(1, 2), Fraction(0)))


def test_pd_feasible_set_and_clip(pd):
    game, _ = pd
    F = feasible_set(game)
    assert {tuple(v) for v in F.vertices} == {(2, 2), (-1, 3), (0, 0), (3, -1)}
    star = clip_below(F, (0, 0))
    assert {tuple(v) for v in star.vertices} == {(0, 0), (Fraction(8, 3), 0), (2, 2), (0, Fraction(8, 3))}
    assert contains(star, (1, 1), interior=True)
    assert not contains(star, (0, 1), interior=True)
    assert contains(star, (0, 1))


def test_intersect_halfspaces_square():
    sq = intersect_halfspaces([((1, 0), 1), ((-1, 0), 0), ((0, 1), 1), ((0, -1), 0)])
    assert polygon_vertices_close(sq, PayoffPolytope.from_points([(0, 0), (1, 0), (1, 1), (0, 1)]), 1e-12)
    empty = intersect_halfspaces([((1, 0), 0), ((-1, 0), -1)])
    assert empty.empty


def test_hausdorff_of_shifted_square():
    a = PayoffPolytope.from_points([(0, 0), (1, 0), (1, 1), (0, 1)])
    b = PayoffPolytope.from_points([(0.5, 0), (1.5, 0), (1.5, 1), (0.5, 1)])
    assert hausdorff_2d(a, b) == pytest.approx(0.5)
    assert hausdorff_2d(a, a) == 0


def test_csv_export_is_exact(tmp_path):
    poly = PayoffPolytope.from_points([(Fraction(1, 3), 0), (1, 0), (0, 1)])
    text = poly.to_csv(tmp_path / "p.csv")
    assert "1/3" in text and (tmp_path / "p.csv").read_text() == text


def test_three_dimensional_hull_membership():
    pts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    poly = PayoffPolytope.from_points([tuple(Fraction(x) for x in p) for p in pts])
    assert dimension(poly) == 3
    assert contains(poly, (Fraction(1, 4),) * 3)
    assert not contains(poly, (Fraction(1, 2),) * 3)


def test_example1_feasible_set_is_a_polygon():
    game, _ = load_bundled("example1")
    assert dimension(feasible_set(game)) == 2
