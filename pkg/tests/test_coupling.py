import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tilekit.coupling import (
    ArrayConfig,
    TileState,
    alpha,
    alpha_map,
    closest_edge_pair,
    end_effector_corners,
    increase_factor,
    is_reachable_jointly,
    min_material_length_over_cycle,
    sweep_lmin,
)
from tilekit.kinematics import Pose, TileGeometry
from tilekit.motion import MotionPattern, SinusoidalParams

GEOM = TileGeometry()


def state(base, delta, phi, r):
    return TileState(tuple(float(v) for v in base), Pose(delta, phi, r))


def brute_alpha(cx, cy):
    """Every edge pair, both corner matchings; keep the matching with the
    smaller summed distance, then the edge pair with the smallest sum."""
    best = None
    for ex, ey in itertools.product(range(4), range(4)):
        a, a1 = cx[ex], cx[(ex + 1) % 4]
        b, b1 = cy[ey], cy[(ey + 1) % 4]
        options = [(np.linalg.norm(a - b), np.linalg.norm(a1 - b1)), (np.linalg.norm(a - b1), np.linalg.norm(a1 - b))]
        pair = min(options, key=sum)
        key = (sum(pair), max(pair))
        best = key if best is None or key < best else best
    return best[1]


def test_level_tiles_alpha_is_gap():
    a = alpha(state((0, 0, 0), 0, 0, 70), state((240, 0, 0), 0, 0, 70), GEOM)
    assert a == pytest.approx(90.0, abs=1e-9)


def test_alpha_frozen_values():
    # frozen from an independent corner/edge enumeration
    a1 = alpha(state((0, 0, 0), 0, 0.2, 70), state((240, 0, 0), 0, 0, 70), GEOM)
    a2 = alpha(state((0, 0, 0), math.pi, 0.3, 60), state((240, 0, 0), 0.5, 0.15, 80), GEOM)
    assert a1 == pytest.approx(78.13978913415885, abs=1e-9)
    assert a2 == pytest.approx(126.21295564002523, abs=1e-9)


def test_corners_of_level_plate():
    c = end_effector_corners(state((10, 0, 0), 0, 0, 70), GEOM)
    np.testing.assert_allclose(c[:, 2], 76.0)
    np.testing.assert_allclose(c[0, :2], (-65.0, -75.0))
    np.testing.assert_allclose(c[2, :2], (85.0, 75.0))


def test_positive_tilt_lowers_plus_x_edge():
    c = end_effector_corners(state((0, 0, 0), 0, 0.2, 70), GEOM)
    assert c[1, 2] < c[0, 2]


def test_closest_edges_face_each_other():
    pair = closest_edge_pair(end_effector_corners(state((0, 0, 0), 0, 0, 70), GEOM),
                             end_effector_corners(state((240, 0, 0), 0, 0, 70), GEOM))
    assert (pair.edge_x, pair.edge_y) == (1, 3)
    assert pair.alpha == pytest.approx(90.0)


pose_st = st.tuples(st.floats(0, 2 * math.pi), st.floats(0, 0.5), st.floats(20, 120))


@settings(max_examples=100, deadline=None)
@given(pose_st, pose_st, st.floats(160, 400))
def test_alpha_matches_brute_force_and_is_symmetric(p, q, D):
    sx = state((0, 0, 0), *p)
    sy = state((D, 0, 0), *q)
    a = alpha(sx, sy, GEOM)
    assert a == pytest.approx(brute_alpha(end_effector_corners(sx, GEOM), end_effector_corners(sy, GEOM)), abs=1e-9)
    assert alpha(sy, sx, GEOM) == a


@settings(max_examples=50, deadline=None)
@given(pose_st, pose_st, st.floats(0, 2 * math.pi), st.floats(-50, 50))
def test_alpha_invariant_under_rigid_motion(p, q, yaw, shift):
    sx, sy = state((0, 0, 0), *p), state((240, 0, 0), *q)
    a = alpha(sx, sy, GEOM)
    rz = np.array([[math.cos(yaw), -math.sin(yaw), 0], [math.sin(yaw), math.cos(yaw), 0], [0, 0, 1]])
    cx = end_effector_corners(sx, GEOM) @ rz.T + shift
    cy = end_effector_corners(sy, GEOM) @ rz.T + shift
    assert brute_alpha(cx, cy) == pytest.approx(a, abs=1e-9)


def test_in_phase_lmin_closed_form():
    # parallel plates offset by D: corner gap is |D x - 150 u(phi)|
    res = min_material_length_over_cycle(
        MotionPattern(SinusoidalParams(phi_max=0.2)), ((0, 0, 0), (300, 0, 0)), check_reachability=False
    )
    assert res.lmin == pytest.approx(155.86535212897144, abs=1e-9)
    assert res.lmin == pytest.approx(math.hypot(300 - 150 * math.cos(0.2), 150 * math.sin(0.2)), abs=1e-9)


def test_level_pattern_shifts_exactly_with_D():
    level = MotionPattern(SinusoidalParams(phi_max=0.0))
    a = min_material_length_over_cycle(level, ((0, 0, 0), (240, 0, 0))).lmin
    b = min_material_length_over_cycle(level, ((0, 0, 0), (250, 0, 0))).lmin
    assert a == pytest.approx(90.0, abs=1e-9)
    assert b - a == pytest.approx(10.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(200, 380), st.floats(0.1, 20))
def test_lmin_grows_no_faster_than_D(phi_max, D, step):
    pattern = MotionPattern(SinusoidalParams(phi_max=phi_max))
    a = min_material_length_over_cycle(pattern, ((0, 0, 0), (D, 0, 0)), check_reachability=False).lmin
    b = min_material_length_over_cycle(pattern, ((0, 0, 0), (D + step, 0, 0)), check_reachability=False).lmin
    assert 0 < b - a <= step + 1e-9


def test_default_pattern_reports_unreachable_samples():
    res = min_material_length_over_cycle(MotionPattern(SinusoidalParams()))
    assert not res.feasible
    assert len(res.infeasible_times) > 0
    assert res.lmin == pytest.approx(264.077423, abs=1e-5)


def test_joint_reachability_margins():
    cfg = ArrayConfig.linear(3, 240, 100)
    states = cfg.states([Pose(0, 0, 70)] * 3)
    ok = is_reachable_jointly(states, cfg)
    assert ok.reachable
    np.testing.assert_allclose(ok.margins, (10.0, 10.0), atol=1e-9)
    tight = is_reachable_jointly(states, cfg.with_lengths((80.0, 100.0)))
    assert not tight.reachable
    assert tight.margins[0] == pytest.approx(-10.0)


def test_array_config_validation():
    with pytest.raises(ValueError, match="L\\[0\\]"):
        ArrayConfig.linear(3, 240, -1)
    with pytest.raises(ValueError):
        ArrayConfig(((0, 0, 0), (1, 0, 0)), (1.0, 2.0))


def test_sweep_shapes_and_periodicity():
    s = sweep_lmin("Ps", (0.0, 2 * math.pi), samples=9, check_reachability=False)
    assert s.values.shape == s.lmin.shape == (9,)
    assert s.lmin[0] == pytest.approx(s.lmin[-1], abs=1e-6)
    with pytest.raises(ValueError):
        sweep_lmin("bogus", (0, 1))
    with pytest.raises(ValueError):
        sweep_lmin("D", (400, 210))


def test_phi_max_sweep_starts_at_level_gap():
    s = sweep_lmin("phimax", (0.0, math.pi / 6), samples=5, check_reachability=False)
    assert s.lmin[0] == pytest.approx(250.0, abs=1e-9)
    assert np.all(np.diff(s.lmin) > 0)


def test_alpha_map_shape_and_level_value():
    m = alpha_map([0.0, math.pi], [0.0, 0.1, 0.2])
    assert m.shape == (2, 3)
    assert m[0, 0] == pytest.approx(60.0)
    assert m[1, 0] == pytest.approx(60.0)


def test_increase_factor():
    assert increase_factor(340, 150) == pytest.approx(1.8444444444444446)
    assert increase_factor(150, 150) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        increase_factor(0, 150)
