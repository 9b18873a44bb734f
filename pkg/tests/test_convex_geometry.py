import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import LineString, MultiPoint, Polygon

from mobile_sampling import convex_geometry as cg

SQ = cg.cube(2, 0.5)
DIAG = np.array([1.0, 1.0]) / math.sqrt(2)


def unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def shapely_chord(body, q, t):
    """Chord length of a planar polytope by shapely line clipping."""
    poly = MultiPoint([tuple(v) for v in body.vertex_array]).convex_hull
    q = np.asarray(q, float)
    p = np.array([-q[1], q[0]])
    L = 10 * body.circumradius
    line = LineString([tuple(t * q - L * p), tuple(t * q + L * p)])
    return poly.intersection(line).length


def shapely_shadow(body, q):
    q = np.asarray(q, float)
    p = np.array([-q[1], q[0]])
    s = body.vertex_array @ p
    return s.max() - s.min()


def _polygon_from(start, gaps, radii):
    ang = start + np.cumsum([0.0] + list(gaps))
    V = np.column_stack([np.asarray(radii) * np.cos(ang), np.asarray(radii) * np.sin(ang)])
    return cg.symmetric_polytope(np.vstack([V, -V]))


# half-turn vertex angles spread out so the hull is always full-dimensional
symmetric_polygons = st.integers(2, 5).flatmap(lambda k: st.builds(
    _polygon_from,
    st.floats(0, math.pi),
    st.lists(st.floats(0.25, (math.pi - 0.25) / (k - 1)), min_size=k - 1, max_size=k - 1),
    st.lists(st.floats(0.3, 1.0), min_size=k, max_size=k),
))


# -- sections -----------------------------------------------------------------


@pytest.mark.parametrize("q, expected", [((1.0, 0.0), 1.0), (tuple(DIAG), math.sqrt(2))])
def test_square_central_sections(q, expected):
    assert np.isclose(cg.section_at_height(SQ, q, 0.0).measure, expected, atol=1e-12)


def test_cross_polytope_diagonal_section_is_regular_hexagon():
    X = cg.cross_polytope(3, 1.0)
    res = cg.section_at_height(X, np.ones(3) / math.sqrt(3), 0.0)
    assert np.isclose(res.measure, 3 * math.sqrt(3) / 4, atol=1e-12)
    assert len(res.polygon) == 6
    # all vertices at the same distance from the origin
    r = np.linalg.norm(res.embed(), axis=1)
    assert np.allclose(r, r[0])


@pytest.mark.parametrize("body", [SQ, cg.ball(2, 0.5), cg.cross_polytope(3, 1.0), cg.cube(3, 0.5), cg.ball(3, 1.0)])
def test_section_beyond_circumradius_is_empty(body):
    q = np.ones(body.dim) / math.sqrt(body.dim)
    assert cg.section_at_height(body, q, body.circumradius * 1.01).measure == 0.0


@pytest.mark.parametrize("r, t", [(1.0, 0.0), (1.0, 0.5), (0.5, 0.3), (2.0, 1.9)])
def test_ball_sections_closed_form(r, t):
    assert np.isclose(cg.section_at_height(cg.ball(2, r), unit(0.7), t).measure, 2 * math.sqrt(r * r - t * t))
    assert np.isclose(cg.section_at_height(cg.ball(3, r), [0, 0, 1], t).measure, math.pi * (r * r - t * t))


@pytest.mark.parametrize("theta", np.linspace(0, math.pi, 13))
@pytest.mark.parametrize("t", [0.0, 0.2, -0.35])
def test_square_chords_match_shapely(theta, t):
    q = unit(theta)
    assert np.isclose(cg.section_at_height(SQ, q, t).measure, shapely_chord(SQ, q, t), atol=1e-9)


def test_cube_section_in_3d_matches_shapely_polygon():
    C = cg.cube(3, 0.5)
    q = np.array([1.0, 2.0, 2.0]) / 3
    res = cg.section_at_height(C, q, 0.1)
    assert np.isclose(res.measure, Polygon(res.polygon).convex_hull.area, atol=1e-12)
    assert np.allclose(res.embed() @ q, 0.1)
    assert np.all(C.contains(res.embed(), tol=1e-9))


@settings(max_examples=40, deadline=None)
@given(symmetric_polygons, st.floats(0, math.pi), st.floats(0, 1))
def test_section_symmetric_in_height(body, theta, frac):
    t = frac * body.circumradius
    q = unit(theta)
    assert np.isclose(cg.section_at_height(body, q, t).measure, cg.section_at_height(body, q, -t).measure, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(symmetric_polygons, st.floats(0, math.pi))
def test_central_section_is_largest(body, theta):
    q = unit(theta)
    c = cg.section_at_height(body, q, 0.0).measure
    for t in np.linspace(0.05, 1.0, 8) * body.circumradius:
        assert cg.section_at_height(body, q, t).measure <= c + 1e-9


@settings(max_examples=40, deadline=None)
@given(symmetric_polygons, st.floats(0, math.pi), st.floats(-1, 1))
def test_polygon_sections_match_shapely(body, theta, frac):
    q = unit(theta)
    t = frac * body.circumradius
    assert np.isclose(cg.section_at_height(body, q, t).measure, shapely_chord(body, q, t), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(symmetric_polygons, st.floats(0, 2 * math.pi), st.floats(0, math.pi))
def test_sections_invariant_under_rotation(body, rot, theta):
    R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
    turned = cg.symmetric_polytope(body.vertex_array @ R.T)
    q = unit(theta)
    for t in (0.0, 0.3 * body.circumradius):
        a = cg.section_at_height(body, q, t).measure
        b = cg.section_at_height(turned, R @ q, t).measure
        assert np.isclose(a, b, atol=1e-9)


# -- projections and Delta ----------------------------------------------------


def test_projection_examples():
    for th in np.linspace(0, math.pi, 7):
        assert np.isclose(cg.projection_measure(cg.ball(2, 0.5), unit(th)), 1.0)
    assert np.isclose(cg.projection_measure(SQ, DIAG), math.sqrt(2))


@settings(max_examples=40, deadline=None)
@given(symmetric_polygons, st.floats(0, math.pi))
def test_section_never_exceeds_shadow(body, theta):
    q = unit(theta)
    sec = cg.section_at_height(body, q, 0.0).measure
    shadow = cg.projection_measure(body, q)
    assert sec <= shadow + 1e-9
    assert np.isclose(shadow, shapely_shadow(body, q), atol=1e-9)


def test_delta_of_square_is_diagonal():
    q, value = cg.delta_E(SQ)
    assert abs(value - math.sqrt(2)) < 1e-3
    assert np.isclose(abs(q[0]), abs(q[1]), atol=1e-3)


@pytest.mark.parametrize("r", [0.25, 0.5, 2.0])
def test_delta_of_disk(r):
    assert np.isclose(cg.delta_E(cg.ball(2, r))[1], 2 * r, atol=1e-9)
    shadows = [cg.projection_measure(cg.ball(2, r), q) for q in cg.direction_grid(2, 0.05)]
    assert max(shadows) - min(shadows) < 1e-9


def test_delta_of_cross_polytope_3d_against_dense_grid():
    X = cg.cross_polytope(3, 1.0)
    _, value = cg.delta_E(X)
    # dense-grid oracle: shadow area of the hull of projected vertices
    rng = np.random.default_rng(3)
    Q = rng.normal(size=(20000, 3))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    Q = np.vstack([Q, np.ones((1, 3)) / math.sqrt(3)])
    best = 0.0
    for q in Q:
        B = cg.perp_basis(q)
        best = max(best, MultiPoint([tuple(p) for p in X.vertex_array @ B.T]).convex_hull.area)
    assert best - 1e-3 <= value <= best + 1e-3
    # the axis shadow is a square with diagonal 2; the (1,1,1) hexagon has area sqrt(3) only
    assert np.isclose(value, 2.0, atol=1e-3)


@settings(max_examples=15, deadline=None)
@given(symmetric_polygons, st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 0.8))
def test_delta_invariances(body, vx, vy, growth):
    _, d0 = cg.delta_E(body)
    # shadows of a translated vertex set: widths of the projected vertices
    shifted = body.vertex_array + [vx, vy]
    grid = cg.direction_grid(2, 0.01)
    widths = [np.ptp(shifted @ np.array([-q[1], q[0]])) for q in grid]
    plain = [cg.projection_measure(body, q) for q in grid]
    assert np.allclose(widths, plain, atol=1e-12)
    assert d0 >= max(plain) - 1e-12
    assert np.isclose(cg.delta_E(cg.dilate(body, 1 + growth))[1], (1 + growth) * d0, rtol=1e-6)


# -- minimal sections ------------------------------------------------------------


@pytest.mark.parametrize("body, expected", [(SQ, 1.0), (cg.ball(2, 0.5), 1.0), (cg.cube(3, 0.5), 1.0)])
def test_min_central_section(body, expected):
    q, value = cg.min_central_section(body)
    assert abs(value - expected) < 1e-3
    if body.shape == "cube":
        assert np.isclose(np.max(np.abs(q)), 1.0, atol=1e-3)


def test_min_section_of_disk_ties_to_first_grid_direction():
    q, _ = cg.min_central_section(cg.ball(2, 0.5))
    assert np.allclose(q, cg.direction_grid(2, 0.01)[0])


# -- dilation and enlargement ---------------------------------------------------


def test_dilate_cube():
    D = cg.dilate(SQ, 2)
    assert D.shape == "cube" and D.size == 1.0


@pytest.mark.parametrize("body", [SQ, cg.ball(3, 0.7), cg.cross_polytope(3, 1.0), cg.cross_polytope(2, 0.5)])
@pytest.mark.parametrize("s", [0.5, 1.7])
def test_dilate_volume_scaling(body, s):
    assert np.isclose(cg.dilate(body, s).volume, s**body.dim * body.volume, atol=1e-9)


@pytest.mark.parametrize("delta", [0.01, 0.3, 0.9])
def test_shrunk_body_lies_in_interior(delta):
    X = cg.cross_polytope(2, 1.0)
    rng = np.random.default_rng(0)
    # boundary samples: points on the edges
    V = X.vertex_array[np.argsort(np.arctan2(X.vertex_array[:, 1], X.vertex_array[:, 0]))]
    u = rng.uniform(size=(400, 1))
    i = rng.integers(0, len(V), 400)
    P = V[i] * (1 - u) + V[(i + 1) % len(V)] * u
    assert np.all(X.gauge((1 - delta) * P) < 1 - 1e-12)


def test_enlarged_ball_adds_radii():
    E = cg.minkowski_enlarge(cg.ball(2, 0.5), 0.25)
    assert E.shape == "ball" and np.isclose(E.size, 0.75)


@pytest.mark.parametrize("d", [2, 3])
def test_enlarged_cube_contains_rounded_corners(d):
    eps = 0.2
    E = cg.minkowski_enlarge(cg.cube(d, 0.5), eps)
    assert E.approximate
    corners = np.array(np.meshgrid(*[(-1, 1)] * d)).reshape(d, -1).T * (0.5 + eps / math.sqrt(d))
    assert np.all(E.contains(corners, tol=1e-9))


def test_enlargement_contains_body():
    body = cg.cross_polytope(3, 1.0)
    E = cg.minkowski_enlarge(body, 0.1)
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, size=(10_000, 3))
    X = X[body.contains(X)]
    assert np.all(E.contains(X))


# -- continuity of sections ---------------------------------------------------


def test_axis_cube_sections_constant():
    delta = cg.section_continuity_delta(cg.cube(3, 0.5), [0, 0, 1], 0.0, 0.1, 0.01)
    assert delta >= 0.4


def test_cross_polytope_continuity_positive():
    delta = cg.section_continuity_delta(cg.cross_polytope(3, 1.0), np.ones(3) / math.sqrt(3), 0.0, 0.05, 0.005)
    assert delta > 0


def test_continuity_at_touching_height():
    X = cg.cross_polytope(3, 1.0)
    q = np.array([0.0, 0.0, 1.0])
    assert cg.section_continuity_delta(X, q, 1.0, 0.1, 0.01) > 0


# -- bodies and parsing ----------------------------------------------------------


@pytest.mark.parametrize("text, shape, size", [("cube:0.5", "cube", 0.5), ("ball:1", "ball", 1.0), ("cross:2", "cross", 2.0)])
def test_parse_body(text, shape, size):
    b = cg.parse_body(text, 2)
    assert (b.shape, b.size) == (shape, size)


@pytest.mark.parametrize("text", ["cube", "simplex:1", "cube:"])
def test_parse_body_rejects(text):
    with pytest.raises(ValueError):
        cg.parse_body(text, 2)


def test_asymmetric_vertices_rejected():
    with pytest.raises(ValueError):
        cg.symmetric_polytope([[1, 0], [0, 1], [-1, -1]])


def test_body_json_round_trip():
    for b in (SQ, cg.ball(3, 0.2), cg.symmetric_polytope([[1, 0.2], [-1, -0.2], [0.1, 1], [-0.1, -1]])):
        c = cg.ConvexBody.from_json(b.to_json())
        assert np.isclose(c.volume, b.volume)
        assert c.shape == b.shape


def test_direction_normalization():
    q = cg.as_direction([3.0, 4.0])
    assert abs(np.linalg.norm(q) - 1) < 1e-12
    with pytest.raises(ValueError):
        cg.as_direction([0.0, 0.0])
