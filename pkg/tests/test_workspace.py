import math

import numpy as np
import pytest

from tilekit.kinematics import TileGeometry
from tilekit.workspace import WorkspaceBounds, sweep_workspace, workspace_bounds


@pytest.fixture(scope="module")
def cloud():
    return sweep_workspace(resolution=12)


def test_point_count_and_order(cloud):
    assert len(cloud) + len(cloud.singular) == 12 ** 3
    assert len(cloud.singular) == 0
    # row-major: last angle varies fastest
    axis = np.linspace(0.0, 7 * math.pi / 18, 12)
    np.testing.assert_allclose(cloud.theta[:12, 2], axis)
    np.testing.assert_allclose(cloud.theta[:12, 0], 0.0)


def test_rows_column_layout(cloud):
    rows = cloud.rows()
    assert rows.shape == (len(cloud), 9)
    np.testing.assert_allclose(rows[:, 3:6], cloud.points)
    np.testing.assert_allclose(rows[:, 8], np.linalg.norm(cloud.points, axis=1))


def test_top_of_cloud_is_level_full_extension(cloud):
    top = np.argmax(cloud.points[:, 2])
    assert cloud.points[top, 2] == pytest.approx(130 * math.sin(7 * math.pi / 18), abs=1e-9)
    assert cloud.phi[top] == pytest.approx(0.0, abs=1e-9)


def test_bounds(cloud):
    b = workspace_bounds(cloud)
    assert b.lower[2] == pytest.approx(0.0, abs=1e-9)
    assert b.upper[2] == pytest.approx(122.16004070216808, abs=1e-9)
    assert b.contains(WorkspaceBounds(b.lower + 1, b.upper - 1))


def test_bounds_of_empty_cloud_raise():
    with pytest.raises(ValueError):
        workspace_bounds(np.zeros((0, 3)))


def test_bounds_monotone_in_limit():
    small = workspace_bounds(sweep_workspace(TileGeometry(theta_max=math.pi / 4), resolution=9))
    big = workspace_bounds(sweep_workspace(TileGeometry(theta_max=math.pi / 3), resolution=9))
    assert big.contains(small)


def test_singular_grid_points_are_recorded():
    geom = TileGeometry(base_radius=0.0, theta_max=math.pi / 2)
    c = sweep_workspace(geom, resolution=3)
    assert len(c) + len(c.singular) == 27
    assert any(np.allclose(t, math.pi / 2) for t in c.singular)


def test_resolution_must_be_at_least_two():
    with pytest.raises(ValueError):
        sweep_workspace(resolution=1)
