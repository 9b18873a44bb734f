import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from shapely.geometry import LineString, box

from mobile_sampling import convex_geometry as cg
from mobile_sampling import trajectory as tj


def vertical_lines(spacing=1.0):
    return tj.uniform_set(2, [0.0, 1.0], spacing)


# -- point sets ---------------------------------------------------------------


def test_lattice_materialize_is_half_open():
    L = tj.lattice(1, 0.5)
    x = L.materialize([0.0], [2.0])[:, 0]
    assert np.allclose(x, [0.0, 0.5, 1.0, 1.5])


def test_periodized_density_and_points():
    P = tj.periodized([[0.0], [0.1]], 2.0)
    assert P.density() == 1.0
    assert np.allclose(P.materialize([0.0], [4.0])[:, 0], [0.0, 0.1, 2.0, 2.1])
    assert np.isclose(P.separation(), 0.1)


def test_periodized_base_must_lie_in_cell():
    with pytest.raises(ValueError):
        tj.periodized([[2.5]], 2.0)


@pytest.mark.parametrize("step", [0.25, 1.0, 3.0])
def test_lattice_density(step):
    assert np.isclose(tj.lattice(1, step).density(), 1 / step)
    assert np.isclose(tj.lattice(2, step).density(), 1 / step**2)


def test_point_set_json_round_trip():
    for P in (tj.lattice(2, [0.5, 1.0], offset=[0.1, 0.2]), tj.periodized([[0.0, 0.5]], [1.0, 2.0]),
              tj.finite([[0.0, 1.0], [2.0, 3.0]])):
        Q = tj.PointSet.from_dict(P.to_dict())
        lo, hi = [-3, -3], [3, 3]
        assert np.allclose(P.materialize(lo, hi), Q.materialize(lo, hi))


def test_translation_and_scaling():
    L = tj.lattice(1, 0.5)
    assert np.allclose(L.translated(0.2).materialize([0.0], [1.0])[:, 0], [0.2, 0.7])
    assert np.isclose(L.scaled(2.0).density(), 1.0)


# -- trajectory sets -------------------------------------------------------------


def test_parallel_cross_section_lies_in_perp():
    q = np.array([1.0, 2.0, 2.0]) / 3
    P = tj.parallel_lines(q, tj.lattice(2, 1.0))
    assert np.all(np.abs(P.basis @ q) < 1e-12)


def test_polyline_validation():
    with pytest.raises(ValueError):
        tj.polylines([[[0.0, 0.0]]])
    with pytest.raises(ValueError):
        tj.polylines([[[0.0, 0.0], [np.inf, 1.0]]])


def test_trajectory_json_round_trip():
    for P in (tj.hairs(3), vertical_lines(0.5), tj.polylines([[[0, 0], [1, 1], [2, 0]]])):
        Q = tj.TrajectorySet.from_json(P.to_json())
        assert np.isclose(tj.window_length(P, [0.3, 0.1], 7.0), tj.window_length(Q, [0.3, 0.1], 7.0))


@pytest.mark.parametrize("text, kind", [("hairs:4", "hairs"), ("uniform:0.5", "parallel"), ("uniform:1:0.3", "parallel")])
def test_parse_trajectory(text, kind):
    assert tj.parse_trajectory(text).kind == kind


@pytest.mark.parametrize("n", [1, 2, 3, 4, 8])
def test_hairs_contain_their_sampling_set(n):
    G = tj.hair_sampling_set(n)
    X = G.materialize([-3 * n, -5], [3 * n, 5])
    assert len(X) > 0
    assert tj.on_trajectories(tj.hairs(n), X).all()
    assert len(tj.hair_sampling_factor(n).materialize([0.0], [float(n)])) == 2 * n
    assert G.separation() > 0


def test_points_off_hairs_detected():
    P = tj.hairs(4)
    assert not tj.on_trajectories(P, [[1.0, 0.5]]).any()
    assert tj.on_trajectories(P, [[4.0, 0.5], [4.2, 3.0]]).all()
    assert not tj.on_trajectories(P, [[4.3, 3.0]]).any()


# -- window lengths ---------------------------------------------------------------


def test_two_chords_example():
    L = tj.window_length(vertical_lines(), [0.5, 0.0], 1.0)
    assert np.isclose(L, 2 * math.sqrt(3))
    # quadrature of the chord indicator
    chord = lambda x: 2 * math.sqrt(max(1 - (x - 0.5) ** 2, 0.0))
    assert np.isclose(L, chord(0.0) + chord(1.0))
    area, _ = integrate.quad(lambda y: 1.0, -math.sqrt(0.75), math.sqrt(0.75))
    assert np.isclose(L, 2 * area)


@pytest.mark.parametrize("a", [1.5, 10.0, 77.0])
def test_single_line_diameter(a):
    P = tj.parallel_lines([0.0, 1.0], tj.finite([[0.0]]))
    assert np.isclose(tj.window_length(P, [0.0, 0.0], a), 2 * a)


def test_empty_window():
    P = tj.parallel_lines([0.0, 1.0], tj.finite([[0.0]]))
    assert tj.window_length(P, [5.0, 0.0], 1.0) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0, math.pi), st.floats(0.3, 2.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(2, 9))
def test_cube_window_length_matches_shapely(theta, spacing, cx, cy, a):
    q = [math.cos(theta), math.sin(theta)]
    P = tj.uniform_set(2, q, spacing)
    got = tj.window_length(P, [cx, cy], a, "cube")
    B = box(cx - a, cy - a, cx + a, cy + a)
    p = np.array([-q[1], q[0]])
    want = 0.0
    for k in range(-40, 41):
        base = k * spacing * p
        want += B.intersection(LineString([tuple(base - 50 * np.array(q)), tuple(base + 50 * np.array(q))])).length
    assert np.isclose(got, want, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.floats(-10, 10), st.floats(-10, 10), st.floats(1.5, 15), st.floats(1.01, 2.0))
def test_window_length_monotone_in_radius(n, cx, cy, a, grow):
    P = tj.hairs(n)
    assert tj.window_length(P, [cx, cy], a) <= tj.window_length(P, [cx, cy], a * grow) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(0, math.pi), st.floats(-5, 5), st.floats(-5, 5), st.floats(1.5, 12))
def test_window_length_additive_over_split(theta, cx, cy, a):
    q = [math.cos(theta), math.sin(theta)]
    # lines at 2Z and 2Z + 1 together form Z
    even = tj.parallel_lines(q, tj.lattice(1, 2.0))
    odd = tj.parallel_lines(q, tj.lattice(1, 2.0, offset=1.0))
    whole = tj.parallel_lines(q, tj.lattice(1, 1.0))
    c = [cx, cy]
    assert np.isclose(tj.window_length(even, c, a) + tj.window_length(odd, c, a), tj.window_length(whole, c, a))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(-4, 4), st.floats(-4, 4))
def test_rigid_motion_keeps_polyline_density(rot, vx, vy):
    rng = np.random.default_rng(11)
    curves = [np.cumsum(rng.normal(size=(6, 2)), axis=0) for _ in range(4)]
    R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
    v = np.array([vx, vy])
    P = tj.polylines(curves)
    Q = tj.polylines([c @ R.T + v for c in curves])
    C = np.array([[0.0, 0.0], [1.0, -2.0], [3.0, 1.0]])
    a = tj.path_density(P, [2.0, 4.0], centers=C)
    b = tj.path_density(Q, [2.0, 4.0], centers=C @ R.T + v)
    assert np.isclose(a.lower, b.lower, atol=1e-9) and np.isclose(a.upper, b.upper, atol=1e-9)


# -- path density ---------------------------------------------------------------


@pytest.mark.parametrize("spacing", [0.5, 1.0])
def test_uniform_planar_density(spacing):
    est = tj.path_density(vertical_lines(spacing), [25, 50, 100, 200])
    assert est.lower <= est.upper
    assert abs(est.lower * spacing - 1) <= 2 / 200 and abs(est.upper * spacing - 1) <= 2 / 200


def test_uniform_3d_density():
    P = tj.uniform_set(3, [0, 0, 1], 1.0)
    est = tj.path_density(P, [10, 20, 40], centers_per_radius=2)
    assert abs(est.upper - 1) < 0.05 and abs(est.lower - 1) < 0.05


@pytest.mark.parametrize("n, expected", [(1, 2.0), (2, 0.75), (4, 0.3125)])
def test_hairs_density_counting(n, expected):
    # direct count over a 100 x 100 cube window covering whole periods once
    L = tj.window_length(tj.hairs(n), [50.5, 50.5], 50.0, "cube")
    assert np.isclose(L / 100**2, expected, rtol=0.01)


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_hairs_density_decays_like_one_over_n(n):
    assert 1 / n + 1 / n**2 <= 2 / n


def test_hairs4_upper_density():
    est = tj.path_density(tj.hairs(4), [25, 50, 100, 200])
    assert abs(est.upper - 0.3125) <= 0.05 * 0.3125


def test_ball_and_cube_windows_agree():
    P = tj.uniform_set(2, [math.cos(0.4), math.sin(0.4)], 0.7)
    b = tj.path_density(P, [200], window="ball")
    c = tj.path_density(P, [200], window="cube")
    assert abs(b.upper - c.upper) / c.upper < 0.05


@pytest.mark.parametrize("cross, expected", [(tj.lattice(1, 0.5), 2.0), (tj.periodized([[0.0], [0.1]], 2.0), 1.0)])
def test_cross_section_density(cross, expected):
    P = tj.parallel_lines([0.0, 1.0], cross)
    assert np.isclose(tj.parallel_cross_section_density(P), expected)
    assert abs(tj.path_density(P, [25, 50, 100, 200]).upper - expected) <= 0.05 * expected


def test_density_rows_and_schedule():
    est = tj.path_density(vertical_lines(), [5, 10], centers_per_radius=3)
    assert len(est.schedule) == 2
    rows = list(est.csv_rows())
    assert rows[0][0] == "radius" and len(rows) == 1 + 2 * (1 + 8 + 3)


def test_density_rejects_bad_radii():
    with pytest.raises(ValueError):
        tj.path_density(vertical_lines(), [10, 5])


# -- short path -------------------------------------------------------------------


def test_short_path_trivial_cases():
    assert tj.short_path([[0.1, 0.2]], 1.0).length == 0.0
    sp = tj.short_path([[0.0, 0.0], [0.3, 0.4]], 1.0)
    assert np.isclose(sp.length, 0.5)


@pytest.mark.parametrize("seed", range(6))
def test_short_path_within_three_of_optimal(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    r = np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0, 2 * math.pi, n)
    X = np.column_stack([r * np.cos(th), r * np.sin(th)])
    best = min(
        np.linalg.norm(np.diff(X[list(p)], axis=0), axis=1).sum() for p in itertools.permutations(range(n))
    )
    assert tj.short_path(X, 1.0).length <= 3 * best + 1e-12


@pytest.mark.parametrize("n", [100, 1000, 10000])
def test_short_path_constant_bounded(n):
    rng = np.random.default_rng(n)
    r = np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0, 2 * math.pi, n)
    sp = tj.short_path(np.column_stack([r * np.cos(th), r * np.sin(th)]), 1.0)
    assert sp.constant <= 4


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(2, 3), st.integers(0, 10**6))
def test_short_path_visits_every_point_inside_ball(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    X *= (rng.uniform(size=(n, 1)) ** (1 / d)) / np.linalg.norm(X, axis=1, keepdims=True)
    sp = tj.short_path(X, 1.0)
    assert sorted(sp.order.tolist()) == list(range(n))
    assert np.all(np.linalg.norm(sp.vertices, axis=1) <= 1 + 1e-12)
    for x in X:
        assert np.min(np.linalg.norm(sp.vertices - x, axis=1)) < 1e-12


def test_short_path_rejects_outside_points():
    with pytest.raises(ValueError):
        tj.short_path([[2.0, 0.0]], 1.0)


# -- connector certificates ------------------------------------------------------------


def test_single_line_has_no_overhead():
    P = tj.parallel_lines([0.0, 1.0], tj.finite([[0.0]]))
    cert = tj.c2_certificate(P, [0.0, 0.0], 30.0)
    assert cert.verified and abs(cert.overhead) < 1e-9


def test_uniform_overhead_decreases():
    ratios = [tj.c2_certificate(vertical_lines(), [0.0, 0.0], a).overhead / a**2 for a in (25, 50, 100, 200)]
    assert ratios[1] < 0.2
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_hairs2_certificate():
    cert = tj.c2_certificate(tj.hairs(2), [0.0, 0.0], 50.0)
    assert cert.verified and cert.overhead / 50.0**2 < 0.5


@pytest.mark.parametrize("n", [2, 4, 8])
def test_hairs_overhead_respects_dead_end_bound(n):
    # each hair tip is a dead end: a disk of radius 1/n around it forces 1/n extra length,
    # so no connector beats (hair count - 2) / n
    a = 50.0
    cert = tj.c2_certificate(tj.hairs(n), [0.0, 0.0], a)
    tips = np.array([[n * k + 1 / n, j] for k in range(-int(a / n) - 1, int(a / n) + 1)
                     for j in range(-int(a), int(a) + 1)], dtype=float)
    tips = tips[np.linalg.norm(tips, axis=1) <= a - 1 / n]
    assert cert.overhead >= (len(tips) - 2) / n


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["uniform", "hairs"]), st.integers(1, 5), st.floats(-20, 20), st.floats(-20, 20),
       st.floats(3, 25))
def test_certificate_curve_is_at_least_window_length(kind, n, cx, cy, a):
    P = tj.hairs(n) if kind == "hairs" else tj.uniform_set(2, [math.cos(n), math.sin(n)], 0.5 * n)
    cert = tj.c2_certificate(P, [cx, cy], a)
    assert cert.verified
    assert cert.length >= cert.window_length - 1e-9
    assert cert.overhead >= -1e-9


def test_certificate_in_3d():
    P = tj.uniform_set(3, [0, 0, 1], 1.0)
    cert = tj.c2_certificate(P, np.zeros(3), 6.0)
    assert cert.verified and cert.overhead >= 0


# -- covering ---------------------------------------------------------------------


def test_unit_lines_covered_by_half_cube():
    res = tj.covering_check(vertical_lines(1.0), cg.cube(2, 0.5), 6.0, 0.05)
    assert res.covered and res.witness is None


def test_spacing_two_leaves_gap():
    res = tj.covering_check(vertical_lines(2.0), cg.cube(2, 0.5), 6.0, 0.05)
    assert not res.covered
    # the witness sits one unit from the nearest line
    assert np.isclose(abs(res.witness[0] - 2 * np.round(res.witness[0] / 2)), 1.0, atol=0.05)


def test_hairs_not_covered():
    res = tj.covering_check(tj.hairs(4), cg.cube(2, 0.5), 8.0, 0.05)
    assert not res.covered


def test_covering_pitch_enforced():
    with pytest.raises(ValueError):
        tj.covering_check(vertical_lines(), cg.cube(2, 0.5), 4.0, 0.5)
