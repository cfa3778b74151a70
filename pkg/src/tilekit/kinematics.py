"""Forward and inverse kinematics of a single 3-leg origami tile.

Each leg is hinged at ``B_i`` on the base circle, folds at a central
waterbomb joint ``J_i`` and meets the end effector at ``E_i``. The base
and platform hinges are mirror images across the plane through the three
central joints, so the end-effector centre ``O_E`` is the reflection of the
base centre ``O_B`` (the origin) across that plane.

Lengths are in mm, angles in rad.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "KinematicsError",
    "LimitViolationError",
    "SingularConfigurationError",
    "UnreachablePoseError",
    "TileGeometry",
    "LegAngles",
    "Pose",
    "LegJointState",
    "leg_base_positions",
    "joint_positions",
    "forward_kinematics",
    "forward_kinematics_batch",
    "pose_to_cartesian",
    "cartesian_to_pose",
    "inverse_kinematics",
    "inverse_kinematics_batch",
]

_DEGENERATE_SIN = 1e-9
_COLLINEAR_TOL = 1e-9


class KinematicsError(ValueError):
    pass


class LimitViolationError(KinematicsError):
    pass


class SingularConfigurationError(KinematicsError):
    pass


class UnreachablePoseError(KinematicsError):
    pass


@dataclass(frozen=True)
class TileGeometry:
    leg_length: float = 130.0
    base_radius: float = 44.01
    leg_azimuths: tuple[float, float, float] = (math.pi / 3, math.pi, 5 * math.pi / 3)
    theta_min: float = 0.0
    theta_max: float = 7 * math.pi / 18
    plate_width: float = 150.0
    plate_height: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "leg_azimuths", tuple(float(a) for a in self.leg_azimuths))
        problems = []
        if not self.leg_length > 0:
            problems.append(f"leg_length must be > 0, got {self.leg_length}")
        if not self.base_radius >= 0:
            problems.append(f"base_radius must be >= 0, got {self.base_radius}")
        if not 0 <= self.theta_min < self.theta_max <= math.pi / 2:
            problems.append(
                f"need 0 <= theta_min < theta_max <= pi/2, got [{self.theta_min}, {self.theta_max}]"
            )
        if len(self.leg_azimuths) != 3:
            problems.append("leg_azimuths must hold exactly 3 angles")
        else:
            wrapped = [a % (2 * math.pi) for a in self.leg_azimuths]
            for i in range(3):
                for j in range(i + 1, 3):
                    gap = abs(wrapped[i] - wrapped[j])
                    if min(gap, 2 * math.pi - gap) < 1e-12:
                        problems.append("leg_azimuths must be distinct modulo 2*pi")
        if not self.plate_width > 0:
            problems.append(f"plate_width must be > 0, got {self.plate_width}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def half_leg(self) -> float:
        return self.leg_length / 2

    def radial_units(self) -> np.ndarray:
        az = np.asarray(self.leg_azimuths)
        return np.stack([np.cos(az), np.sin(az), np.zeros(3)], axis=1)


class LegAngles(NamedTuple):
    theta1: float
    theta2: float
    theta3: float


@dataclass(frozen=True)
class Pose:
    """End-effector placement as yaw ``delta``, tilt ``phi`` and extension ``r``.

    ``phi = 0`` leaves the yaw undefined, so ``delta`` is stored as 0 there.
    A negative tilt is accepted and rewritten as ``(|phi|, delta + pi)``,
    which describes the same point.
    """

    delta: float = 0.0
    phi: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        delta, phi = float(self.delta), float(self.phi)
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if phi < 0:
            phi, delta = -phi, delta + math.pi
        if phi >= math.pi / 2:
            raise ValueError(f"phi must lie in [0, pi/2), got {phi}")
        if math.sin(phi) < _DEGENERATE_SIN:
            delta = 0.0
        delta = delta % (2 * math.pi)
        # fmod can hand back exactly 2*pi for tiny negative inputs
        if delta >= 2 * math.pi:
            delta = 0.0
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "r", float(self.r))

    def normal(self) -> np.ndarray:
        sp = math.sin(self.phi)
        return np.array([sp * math.cos(self.delta), sp * math.sin(self.delta), math.cos(self.phi)])

    def cartesian(self) -> np.ndarray:
        return self.r * self.normal()


@dataclass(frozen=True)
class LegJointState:
    base_points: np.ndarray
    joint_points: np.ndarray
    effector_points: np.ndarray
    plane_normal: np.ndarray
    plane_offset: float
    effector_centre: np.ndarray = field(repr=False)


def leg_base_positions(geom: TileGeometry) -> np.ndarray:
    """Base hinge points ``B_i``, shape (3, 3), in the tile base frame."""
    return geom.base_radius * geom.radial_units()


def _check_limits(geom: TileGeometry, theta: np.ndarray) -> None:
    bad = (theta < geom.theta_min) | (theta > geom.theta_max)
    if np.any(bad):
        raise LimitViolationError(
            f"leg angles {np.asarray(theta).tolist()} outside "
            f"[{geom.theta_min}, {geom.theta_max}]"
        )


def _joints(geom: TileGeometry, theta: np.ndarray) -> np.ndarray:
    # theta: (N, 3) -> J: (N, 3, 3)
    radial = geom.radial_units()
    base = geom.base_radius * radial
    c = np.cos(theta)[..., None]
    s = np.sin(theta)[..., None]
    up = np.array([0.0, 0.0, 1.0])
    return base[None] + geom.half_leg * (c * radial[None] + s * up)


def joint_positions(geom: TileGeometry, theta) -> np.ndarray:
    """Central joint points ``J_i``, shape (3, 3); each lower link folds outward."""
    theta = np.asarray(theta, dtype=float).reshape(3)
    _check_limits(geom, theta)
    return _joints(geom, theta[None])[0]


def _plane(J: np.ndarray):
    # unit normal (+z oriented) and offset of the plane through J[:, 0..2]
    n = np.cross(J[:, 1] - J[:, 0], J[:, 2] - J[:, 0])
    norm = np.linalg.norm(n, axis=1)
    scale = np.linalg.norm(J[:, 1] - J[:, 0], axis=1) * np.linalg.norm(J[:, 2] - J[:, 0], axis=1)
    # coincident joints (edges below a nanometre) are singular as well
    singular = (norm <= _COLLINEAR_TOL * scale) | (scale < 1e-18)
    safe = np.where(singular, 1.0, norm)
    n = n / safe[:, None]
    n = np.where((n[:, 2] < 0)[:, None], -n, n)
    d = np.einsum("ij,ij->i", n, J[:, 0])
    return n, d, singular


def forward_kinematics_batch(geom: TileGeometry, theta, check_limits: bool = True):
    """Vectorised FK.

    Parameters
    ----------
    geom : TileGeometry
    theta : array_like, shape (N, 3)
    check_limits : raise LimitViolationError on out-of-range angles

    Returns
    -------
    centres : (N, 3) end-effector centres ``O_E``
    normals : (N, 3) unit plane normals
    singular : (N,) bool mask of collinear-joint configurations (rows are NaN)
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if check_limits:
        _check_limits(geom, theta)
    J = _joints(geom, theta)
    n, d, singular = _plane(J)
    centres = 2.0 * d[:, None] * n
    centres[singular] = np.nan
    n[singular] = np.nan
    return centres, n, singular


def cartesian_to_pose(point, normal=None) -> Pose:
    """Recover ``(delta, phi, r)`` from ``O_E``; ``normal`` orients the r = 0 case."""
    point = np.asarray(point, dtype=float)
    r = float(np.linalg.norm(point))
    direction = point / r if r > 0 else (np.asarray(normal, dtype=float) if normal is not None else np.array([0.0, 0.0, 1.0]))
    phi = math.acos(max(-1.0, min(1.0, float(direction[2]))))
    delta = math.atan2(float(direction[1]), float(direction[0]))
    return Pose(delta=delta, phi=phi, r=r)


def forward_kinematics(geom: TileGeometry, theta) -> tuple[Pose, LegJointState]:
    theta = np.asarray(theta, dtype=float).reshape(3)
    _check_limits(geom, theta)
    J = _joints(geom, theta[None])
    n, d, singular = _plane(J)
    if singular[0]:
        raise SingularConfigurationError(f"central joints are collinear for theta={theta.tolist()}")
    n, d, J = n[0], float(d[0]), J[0]
    centre = 2.0 * d * n
    B = leg_base_positions(geom)
    E = B - 2.0 * ((B @ n) - d)[:, None] * n[None]
    state = LegJointState(
        base_points=B,
        joint_points=J,
        effector_points=E,
        plane_normal=n,
        plane_offset=d,
        effector_centre=centre,
    )
    return cartesian_to_pose(centre, n), state


def pose_to_cartesian(pose) -> np.ndarray:
    """``r * (sin phi cos delta, sin phi sin delta, cos phi)``.

    Accepts a :class:`Pose` or a bare ``(delta, phi, r)`` triple; the triple
    is evaluated as given, so a horizontal ``phi = pi/2`` is allowed there.
    """
    if isinstance(pose, Pose):
        return pose.cartesian()
    delta, phi, r = (float(v) for v in pose)
    return r * np.array([math.sin(phi) * math.cos(delta), math.sin(phi) * math.sin(delta), math.cos(phi)])


def _initial_guess(geom: TileGeometry, targets: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(targets, axis=1)
    a = np.arcsin(np.minimum(1.0, r / geom.leg_length))
    return np.repeat(a[:, None], 3, axis=1)


def inverse_kinematics_batch(
    geom: TileGeometry,
    targets,
    tol: float = 1e-6,
    max_iter: int = 100,
    fd_step: float = 1e-6,
    damping: float = 1e-9,
):
    """Damped Newton IK on the Cartesian residual ``O_E(theta) - target``.

    Works on many targets at once. Returns ``(theta, converged, residual)``;
    limits are not enforced here, callers decide what to do with rows that
    did not converge or landed outside ``[theta_min, theta_max]``.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n = targets.shape[0]
    theta = _initial_guess(geom, targets)
    lam = np.full(n, damping)

    def residual(th, goal):
        centres, _, singular = forward_kinematics_batch(geom, th, check_limits=False)
        res = centres - goal
        res[singular] = np.inf
        return res

    res = residual(theta, targets)
    err = np.linalg.norm(res, axis=1)
    active = err >= tol
    eye = np.eye(3)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        th = theta[idx]
        r0 = res[idx]
        jac = np.empty((idx.size, 3, 3))
        for k in range(3):
            step = np.zeros(3)
            step[k] = fd_step
            jac[:, :, k] = (residual(th + step, targets[idx]) - residual(th - step, targets[idx])) / (2 * fd_step)
        jac = np.nan_to_num(jac, nan=0.0, posinf=0.0, neginf=0.0)
        jtj = np.einsum("nji,njk->nik", jac, jac)
        jtr = np.einsum("nji,nj->ni", jac, np.nan_to_num(r0, posinf=0.0))
        scale = np.maximum(np.einsum("nii->n", jtj), 1e-12)
        lhs = jtj + (lam[idx] * scale)[:, None, None] * eye
        delta = -np.linalg.solve(lhs, jtr[..., None])[..., 0]
        cand = th + delta
        cand_res = residual(cand, targets[idx])
        cand_err = np.linalg.norm(cand_res, axis=1)
        better = cand_err < err[idx]
        ok = idx[better]
        theta[ok] = cand[better]
        res[ok] = cand_res[better]
        err[ok] = cand_err[better]
        lam[ok] = np.maximum(lam[ok] * 0.1, damping)
        worse = idx[~better]
        lam[worse] = np.minimum(lam[worse] * 100.0, 1e6)
        active = err >= tol
    return theta, err < tol, err


def inverse_kinematics(geom: TileGeometry, target: Pose, tol: float = 1e-6, max_iter: int = 100) -> LegAngles:
    point = target.cartesian()
    theta, converged, err = inverse_kinematics_batch(geom, point[None], tol=tol, max_iter=max_iter)
    if not converged[0]:
        raise UnreachablePoseError(
            f"no leg angles reach {target} (residual {err[0]:.3g} mm after {max_iter} iterations)"
        )
    # solutions on the boundary may overshoot by round-off
    th = theta[0]
    slack = 1e-9
    th = np.where((th < geom.theta_min) & (th > geom.theta_min - slack), geom.theta_min, th)
    th = np.where((th > geom.theta_max) & (th < geom.theta_max + slack), geom.theta_max, th)
    _check_limits(geom, th)
    return LegAngles(*(float(v) for v in th))
