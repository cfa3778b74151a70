"""scikit-learn style wrapper around the tile kinematics.

Lets leg-angle / end-effector conversions sit inside a ``Pipeline`` and take
part in ``get_params`` / ``set_params`` / ``clone``.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .kinematics import (
    TileGeometry,
    UnreachablePoseError,
    forward_kinematics_batch,
    inverse_kinematics_batch,
)

__all__ = ["TileKinematics"]


class TileKinematics(TransformerMixin, BaseEstimator):
    """Leg angles -> end-effector centre, with IK as the inverse.

    Parameters
    ----------
    leg_length, base_radius, leg_azimuths, theta_min, theta_max, plate_width, plate_height
        Tile geometry, same meaning and defaults as :class:`TileGeometry`.
    output : {"cartesian", "pose"}
        ``transform`` returns ``(x, y, z)`` in mm or ``(delta, phi, r)``.
    tol, max_iter
        Stopping rule of the inverse solver (mm, iterations).
    on_unreachable : {"raise", "nan"}
        What ``inverse_transform`` does with targets that have no in-range solution.

    Notes
    -----
    ``fit`` learns nothing from data: it only validates the geometry and
    stores it as ``geometry_``.
    """

    def __init__(
        self,
        leg_length=130.0,
        base_radius=44.01,
        leg_azimuths=(math.pi / 3, math.pi, 5 * math.pi / 3),
        theta_min=0.0,
        theta_max=7 * math.pi / 18,
        plate_width=150.0,
        plate_height=6.0,
        output="cartesian",
        tol=1e-6,
        max_iter=100,
        on_unreachable="raise",
    ):
        self.leg_length = leg_length
        self.base_radius = base_radius
        self.leg_azimuths = leg_azimuths
        self.theta_min = theta_min
        self.theta_max = theta_max
        self.plate_width = plate_width
        self.plate_height = plate_height
        self.output = output
        self.tol = tol
        self.max_iter = max_iter
        self.on_unreachable = on_unreachable

    def fit(self, X=None, y=None):
        if self.output not in ("cartesian", "pose"):
            raise ValueError(f"output must be 'cartesian' or 'pose', got {self.output!r}")
        if self.on_unreachable not in ("raise", "nan"):
            raise ValueError(f"on_unreachable must be 'raise' or 'nan', got {self.on_unreachable!r}")
        self.geometry_ = TileGeometry(
            leg_length=self.leg_length,
            base_radius=self.base_radius,
            leg_azimuths=tuple(self.leg_azimuths),
            theta_min=self.theta_min,
            theta_max=self.theta_max,
            plate_width=self.plate_width,
            plate_height=self.plate_height,
        )
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        """Forward kinematics for each row of leg angles ``X`` (n, 3), radians."""
        check_is_fitted(self, "geometry_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 leg angles per row, got {X.shape[1]}")
        centres, normals, _ = forward_kinematics_batch(self.geometry_, X)
        if self.output == "cartesian":
            return centres
        r = np.linalg.norm(centres, axis=1)
        safe = np.where(r > 0, r, 1.0)[:, None]
        direction = np.where((r > 0)[:, None], centres / safe, normals)
        phi = np.arccos(np.clip(direction[:, 2], -1.0, 1.0))
        delta = np.where(np.sin(phi) < 1e-9, 0.0, np.arctan2(direction[:, 1], direction[:, 0]) % (2 * np.pi))
        return np.column_stack([delta, phi, r])

    def inverse_transform(self, X):
        """Leg angles reaching each row of ``X`` (same representation as ``transform`` output)."""
        check_is_fitted(self, "geometry_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 columns per row, got {X.shape[1]}")
        if self.output == "pose":
            delta, phi, r = X.T
            X = np.column_stack([r * np.sin(phi) * np.cos(delta), r * np.sin(phi) * np.sin(delta), r * np.cos(phi)])
        geom = self.geometry_
        theta, converged, _ = inverse_kinematics_batch(geom, X, tol=self.tol, max_iter=self.max_iter)
        eps = 1e-9
        theta = np.clip(theta, np.where(theta >= geom.theta_min - eps, geom.theta_min, -np.inf),
                        np.where(theta <= geom.theta_max + eps, geom.theta_max, np.inf))
        in_range = np.all((theta >= geom.theta_min) & (theta <= geom.theta_max), axis=1)
        ok = converged & in_range
        if not ok.all():
            if self.on_unreachable == "raise":
                bad = np.flatnonzero(~ok)
                raise UnreachablePoseError(f"{bad.size} target(s) unreachable, first at row {bad[0]}")
            theta[~ok] = np.nan
        return theta
