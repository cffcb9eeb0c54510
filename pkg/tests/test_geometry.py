import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from macpp.errors import DegenerateInput, InvalidWindow
from macpp.geometry import (ConvexPolygon, Rectangle, area, contains, convex_hull, sample_uniform,
                            unit_square, window_from_dict)


def brute_contains(vertices, p):
    # inside iff p is left of (or on) every ccw edge
    v = np.asarray(vertices)
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < -1e-12:
            return False
    return True


def test_areas():
    assert area(unit_square()) == 1.0
    assert area(Rectangle(0, 2, 0, 3)) == 6.0
    assert area(ConvexPolygon([(0, 0), (1, 0), (0, 1)])) == pytest.approx(0.5)


def test_contains_examples():
    sq = unit_square()
    assert contains(sq, (0.5, 0.5))
    assert not contains(sq, (1.0001, 0.5))
    assert contains(sq, (1.0, 0.0))  # closed
    tri = ConvexPolygon([(0, 0), (1, 0), (0, 1)])
    assert not contains(tri, (0.6, 0.6))
    assert contains(tri, (0.5, 0.5))


@pytest.mark.parametrize("bad", [(0, 0, 0, 1), (1, 0, 0, 1), (0, 1, 2, 2), (0, np.inf, 0, 1)])
def test_rectangle_rejects_degenerate(bad):
    with pytest.raises(InvalidWindow):
        Rectangle(*bad)


def test_polygon_normalisation():
    cw = ConvexPolygon([(1, 1), (1, 0), (0, 0), (0, 1), (0, 1)])
    assert cw.vertices.tolist() == [[0, 0], [1, 0], [1, 1], [0, 1]]
    assert cw == ConvexPolygon([(0, 1), (0, 0), (1, 0), (1, 1)])
    with pytest.raises(InvalidWindow):
        ConvexPolygon([(0, 0), (1, 0), (2, 0), (1, 1)])  # collinear vertex
    with pytest.raises(InvalidWindow):
        ConvexPolygon([(0, 0), (2, 0), (1, 0.2), (1, 2)])  # reflex vertex
    with pytest.raises(InvalidWindow):
        ConvexPolygon([(0, 0), (1, 0), (0, 0)])


def test_hull_examples():
    h = convex_hull([(0, 0), (1, 0), (0, 1), (0.1, 0.1)])
    assert h.vertices.tolist() == [[0, 0], [1, 0], [0, 1]]
    sq = convex_hull([(1, 1), (0, 0), (0, 1), (1, 0)])
    assert sq.area == pytest.approx(1.0)
    # collinear boundary points are removed
    h = convex_hull([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)])
    assert len(h.vertices) == 4


@pytest.mark.parametrize("pts", [[(0, 0), (1, 1), (2, 2), (3, 3)], [(0, 0), (1, 1)], [(1, 1)] * 5])
def test_hull_degenerate(pts):
    with pytest.raises(DegenerateInput):
        convex_hull(pts)


def test_hull_of_uniform_points():
    rng = np.random.default_rng(0)
    pts = rng.uniform(size=(1000, 2))
    h = convex_hull(pts)
    assert h.area <= 1.0
    assert np.all(h.contains(pts))
    assert all(brute_contains(h.vertices, p) for p in pts[:200])


def test_serialisation_round_trip():
    for w in (Rectangle(-1, 2, 0, 0.5), ConvexPolygon([(0, 0), (2, 0), (2, 1), (1, 2)])):
        assert window_from_dict(w.to_dict()) == w
    with pytest.raises(InvalidWindow):
        window_from_dict({"type": "circle"})


def test_sample_uniform_polygon():
    tri = ConvexPolygon([(0, 0), (1, 0), (0, 1)])
    pts = sample_uniform(tri, 5000, np.random.default_rng(3))
    assert pts.shape == (5000, 2) and np.all(tri.contains(pts))
    # centroid of the triangle is (1/3, 1/3)
    assert np.allclose(pts.mean(axis=0), 1 / 3, atol=0.01)


def test_boundary_distance():
    sq = unit_square()
    assert sq.boundary_distance([(0.5, 0.5), (0.1, 0.7)]).tolist() == pytest.approx([0.5, 0.1])
    poly = ConvexPolygon(sq.vertices)
    assert poly.boundary_distance([(0.5, 0.5), (0.1, 0.7)]).tolist() == pytest.approx([0.5, 0.1])


coords = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
point_sets = st.lists(st.tuples(coords, coords), min_size=3, max_size=60)


@settings(max_examples=200, deadline=None)
@given(point_sets)
@example([(0.0, 0.0), (0.0, 2.0), (4.11724928702922e-187, 1.0), (-1.0, 0.0)])
def test_hull_properties(pts):
    try:
        h = convex_hull(pts)
    except DegenerateInput:
        return
    arr = np.array(pts)
    bbox = (arr[:, 0].max() - arr[:, 0].min()) * (arr[:, 1].max() - arr[:, 1].min())
    assert h.area <= bbox * (1 + 1e-12)
    assert np.all(h.contains(arr))
    # ccw and starting at the lexicographic minimum
    v = h.vertices
    assert tuple(v[0]) == min(map(tuple, v))


@settings(max_examples=100, deadline=None)
@given(point_sets, coords, coords)
@example([(0.0, 0.0), (0.0, -1.0), (1.0, -1.6582635932334357e-266), (-1.0, 0.0)], 0.0, 1.0)
@example([(0.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (-1.1150916032381423e-153, 1.0)], 1.0, 0.0)
def test_area_translation_invariant(pts, dx, dy):
    try:
        h = convex_hull(pts)
    except DegenerateInput:
        return
    assert h.shifted(dx, dy).area == pytest.approx(h.area, rel=1e-6, abs=1e-6)
    r = Rectangle(0, 1 + abs(dx), 0, 1 + abs(dy))
    assert r.shifted(dx, dy).area == pytest.approx(r.area)
