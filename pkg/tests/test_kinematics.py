import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tilekit.kinematics import (
    LimitViolationError,
    Pose,
    SingularConfigurationError,
    TileGeometry,
    UnreachablePoseError,
    cartesian_to_pose,
    forward_kinematics,
    forward_kinematics_batch,
    inverse_kinematics,
    inverse_kinematics_batch,
    joint_positions,
    pose_to_cartesian,
    leg_base_positions,
)

GEOM = TileGeometry()
THETA_MAX = 7 * math.pi / 18
angles = st.floats(0.0, THETA_MAX, allow_nan=False)


def analytic_ik(delta, phi, r, geom=GEOM):
    """Closed-form leg angles: each leg's joint must lie on the symmetry plane
    with normal n and offset r/2, giving a*cos(t) + b*sin(t) = c per leg."""
    n = np.array([math.sin(phi) * math.cos(delta), math.sin(phi) * math.sin(delta), math.cos(phi)])
    out = []
    for az in geom.leg_azimuths:
        u = np.array([math.cos(az), math.sin(az), 0.0])
        a = geom.half_leg * (n @ u)
        b = geom.half_leg * n[2]
        c = r / 2 - geom.base_radius * (n @ u)
        rho, g = math.hypot(a, b), math.atan2(b, a)
        roots = [g + math.acos(c / rho), g - math.acos(c / rho)]
        roots = [((x + math.pi) % (2 * math.pi)) - math.pi for x in roots]
        out.append([x for x in roots if -1e-9 <= x <= geom.theta_max + 1e-9])
    return out


# frozen from an independent reflection-across-the-joint-plane computation
FK_ORACLE = [
    ((0.3, 0.5, 0.7), (-0.03297601524160965, 8.040129707486706, 61.38072161911339)),
    ((0.0, 1.2, 0.6), (22.247393808918424, 12.471986675011715, 64.261480903583)),
    ((0.1, 0.1, 1.0), (-8.344005322005355, 14.45224115633839, 46.205171503729396)),
    ((THETA_MAX,) * 3, (0.0, 0.0, 122.16004070216808)),
]


@pytest.mark.parametrize("theta,expected", FK_ORACLE)
def test_forward_matches_reflection_oracle(theta, expected):
    pose, _ = forward_kinematics(GEOM, theta)
    np.testing.assert_allclose(pose.cartesian(), expected, atol=1e-9)


def test_level_pose_at_thirty_degrees():
    pose, _ = forward_kinematics(GEOM, (math.pi / 6,) * 3)
    assert pose.phi == pytest.approx(0.0, abs=1e-12)
    assert pose.r == pytest.approx(65.0, abs=1e-9)


def test_zero_angles_give_origin():
    pose, joints = forward_kinematics(GEOM, (0.0, 0.0, 0.0))
    assert pose.r == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(joints.effector_points, joints.base_points, atol=1e-9)


def test_base_positions():
    b = leg_base_positions(GEOM)
    np.testing.assert_allclose(np.linalg.norm(b, axis=1), 44.01)
    np.testing.assert_allclose(b[:, 2], 0.0)
    np.testing.assert_allclose(b[1], (-44.01, 0.0, 0.0), atol=1e-12)


def test_joint_positions_respect_limits():
    with pytest.raises(LimitViolationError):
        joint_positions(GEOM, (0.1, 0.1, THETA_MAX + 0.01))
    with pytest.raises(LimitViolationError):
        forward_kinematics(GEOM, (-0.01, 0.1, 0.1))


# with no base radius and vertical lower links all three joints coincide
DEGENERATE = TileGeometry(base_radius=0.0, theta_max=math.pi / 2)
SINGULAR_THETA = (math.pi / 2,) * 3


def test_singular_configuration_raises():
    with pytest.raises(SingularConfigurationError):
        forward_kinematics(DEGENERATE, SINGULAR_THETA)


def test_batch_marks_singular_rows_nan():
    centres, normals, singular = forward_kinematics_batch(DEGENERATE, np.array([SINGULAR_THETA, (0.2, 0.2, 0.2)]))
    assert singular.tolist() == [True, False]
    assert np.isnan(centres[0]).all() and np.isfinite(centres[1]).all()


def test_base_positions_examples():
    np.testing.assert_allclose(leg_base_positions(GEOM)[0], (22.005, 38.114, 0.0), atol=1e-3)
    np.testing.assert_allclose(leg_base_positions(DEGENERATE), 0.0, atol=1e-12)


@pytest.mark.parametrize("theta,radius,z", [(0.0, 109.01, 0.0), (math.pi / 2, 44.01, 65.0),
                                            (math.pi / 6, 44.01 + 65 * math.cos(math.pi / 6), 32.5)])
def test_joint_position_examples(theta, radius, z):
    geom = TileGeometry(theta_max=math.pi / 2)
    j = joint_positions(geom, (theta,) * 3)
    np.testing.assert_allclose(np.hypot(j[:, 0], j[:, 1]), radius, atol=1e-9)
    np.testing.assert_allclose(j[:, 2], z, atol=1e-9)


@pytest.mark.parametrize("pose,expected", [
    (Pose(0.0, 0.0, 70.0), (0.0, 0.0, 70.0)),
    ((0.0, math.pi / 2, 70.0), (70.0, 0.0, 0.0)),
    (Pose(math.pi / 2, math.pi / 9, 70.0), (0.0, 23.94, 65.78)),
])
def test_pose_to_cartesian_examples(pose, expected):
    np.testing.assert_allclose(pose_to_cartesian(pose), expected, atol=5e-3)


def test_geometry_validation_lists_every_problem():
    with pytest.raises(ValueError) as err:
        TileGeometry(leg_length=-1.0, plate_width=0.0)
    text = str(err.value)
    assert "leg_length" in text and "plate_width" in text


def test_pose_normalises_negative_tilt():
    p = Pose(0.0, -0.2, 70.0)
    assert p.phi == pytest.approx(0.2)
    assert p.delta == pytest.approx(math.pi)
    np.testing.assert_allclose(p.cartesian(), Pose(0.0, -0.2, 70.0).cartesian())
    assert Pose(1.3, 0.0, 50.0).delta == 0.0


def test_cartesian_to_pose_round_trip():
    p = Pose(2.0, 0.3, 90.0)
    q = cartesian_to_pose(p.cartesian())
    assert (q.delta, q.phi, q.r) == pytest.approx((2.0, 0.3, 90.0))


@pytest.mark.parametrize("pose", [Pose(0.4, 0.2, 80.0), Pose(1.0, 0.1, 60.0)])
def test_inverse_matches_analytic_oracle(pose):
    roots = analytic_ik(pose.delta, pose.phi, pose.r)
    assert all(len(r) == 1 for r in roots)
    got = inverse_kinematics(GEOM, pose)
    np.testing.assert_allclose(got, [r[0] for r in roots], atol=1e-7)


def test_inverse_frozen_values():
    # frozen from the closed-form per-leg solution above
    got = inverse_kinematics(GEOM, Pose(0.4, 0.2, 80.0))
    np.testing.assert_allclose(got, (0.3768994446253462, 1.0198907875274479, 0.6320713106063449), atol=1e-7)


def test_inverse_level_and_origin():
    assert inverse_kinematics(GEOM, Pose(0.0, 0.0, 65.0)) == pytest.approx((math.pi / 6,) * 3, abs=1e-7)
    assert inverse_kinematics(GEOM, Pose(0.0, 0.0, 0.0)) == pytest.approx((0.0,) * 3, abs=1e-9)


def test_inverse_unreachable():
    with pytest.raises(UnreachablePoseError):
        inverse_kinematics(GEOM, Pose(0.0, 0.0, 200.0))


def test_inverse_outside_limits():
    # reachable by the linkage but needs a leg beyond theta_max
    with pytest.raises((LimitViolationError, UnreachablePoseError)):
        inverse_kinematics(GEOM, Pose(0.0, 0.45, 110.0))


@settings(max_examples=200, deadline=None)
@given(angles, angles, angles)
def test_leg_halves_conserved(a, b, c):
    _, joints = forward_kinematics(GEOM, (a, b, c))
    lower = np.linalg.norm(joints.joint_points - joints.base_points, axis=1)
    upper = np.linalg.norm(joints.effector_points - joints.joint_points, axis=1)
    np.testing.assert_allclose(lower, 65.0, atol=1e-9)
    np.testing.assert_allclose(upper, 65.0, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(angles, angles, angles)
def test_effector_points_mirror_base(a, b, c):
    pose, joints = forward_kinematics(GEOM, (a, b, c))
    n, d = joints.plane_normal, joints.plane_offset
    mirrored = joints.base_points - 2 * ((joints.base_points @ n) - d)[:, None] * n
    np.testing.assert_allclose(joints.effector_points, mirrored, atol=1e-9)
    np.testing.assert_allclose(pose.cartesian(), 2 * d * n, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(angles, angles, angles)
def test_cyclic_permutation_rotates_effector(a, b, c):
    rot = np.array([[math.cos(2 * math.pi / 3), -math.sin(2 * math.pi / 3), 0],
                    [math.sin(2 * math.pi / 3), math.cos(2 * math.pi / 3), 0],
                    [0, 0, 1]])
    p, _ = forward_kinematics(GEOM, (a, b, c))
    q, _ = forward_kinematics(GEOM, (c, a, b))
    np.testing.assert_allclose(q.cartesian(), rot @ p.cartesian(), atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(angles, angles, angles)
def test_inverse_of_forward(a, b, c):
    pose, _ = forward_kinematics(GEOM, (a, b, c))
    theta, ok, err = inverse_kinematics_batch(GEOM, pose.cartesian()[None])
    assert ok[0]
    again, _, _ = forward_kinematics_batch(GEOM, theta, check_limits=False)
    assert np.linalg.norm(again[0] - pose.cartesian()) < 1e-6


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, THETA_MAX))
def test_equal_angles_stay_level(a):
    pose, _ = forward_kinematics(GEOM, (a, a, a))
    assert pose.phi == pytest.approx(0.0, abs=1e-9)
    assert pose.r == pytest.approx(130.0 * math.sin(a), rel=1e-9)
