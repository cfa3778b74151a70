"""Reachable end-effector set of one tile, sampled on a leg-angle grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinematics import TileGeometry, forward_kinematics_batch

__all__ = ["WorkspaceCloud", "WorkspaceBounds", "sweep_workspace", "workspace_bounds", "DEFAULT_RESOLUTION"]

DEFAULT_RESOLUTION = 50


@dataclass(frozen=True)
class WorkspaceCloud:
    theta: np.ndarray  # (N, 3) source leg angles, row-major grid order
    points: np.ndarray  # (N, 3) end-effector centres, mm
    delta: np.ndarray
    phi: np.ndarray
    r: np.ndarray
    resolution: int
    singular: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))  # skipped angle triples

    def __len__(self) -> int:
        return self.points.shape[0]

    def rows(self):
        """``(theta1, theta2, theta3, x, y, z, delta, phi, r)`` per point."""
        return np.column_stack([self.theta, self.points, self.delta, self.phi, self.r])


@dataclass(frozen=True)
class WorkspaceBounds:
    lower: np.ndarray
    upper: np.ndarray

    def contains(self, other: "WorkspaceBounds", tol: float = 1e-9) -> bool:
        return bool(np.all(self.lower <= other.lower + tol) and np.all(self.upper >= other.upper - tol))


def _polar(points: np.ndarray, normals: np.ndarray):
    r = np.linalg.norm(points, axis=1)
    direction = np.where((r > 0)[:, None], points / np.where(r > 0, r, 1.0)[:, None], normals)
    phi = np.arccos(np.clip(direction[:, 2], -1.0, 1.0))
    delta = np.arctan2(direction[:, 1], direction[:, 0]) % (2 * np.pi)
    delta = np.where(np.sin(phi) < 1e-9, 0.0, delta)
    return delta, phi, r


def sweep_workspace(geom: Optional[TileGeometry] = None, resolution: int = DEFAULT_RESOLUTION) -> WorkspaceCloud:
    """Forward kinematics on the uniform grid ``[theta_min, theta_max]^3``.

    Singular (collinear-joint) configurations are kept aside in
    ``cloud.singular`` rather than dropped silently.
    """
    geom = geom or TileGeometry()
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    axis = np.linspace(geom.theta_min, geom.theta_max, resolution)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    points, normals, singular = forward_kinematics_batch(geom, grid)
    keep = ~singular
    delta, phi, r = _polar(points[keep], normals[keep])
    return WorkspaceCloud(
        theta=grid[keep],
        points=points[keep],
        delta=delta,
        phi=phi,
        r=r,
        resolution=resolution,
        singular=grid[singular],
    )


def workspace_bounds(cloud) -> WorkspaceBounds:
    points = cloud.points if isinstance(cloud, WorkspaceCloud) else np.atleast_2d(np.asarray(cloud, dtype=float))
    if points.size == 0:
        raise ValueError("workspace cloud is empty")
    return WorkspaceBounds(points.min(axis=0), points.max(axis=0))
