import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from tilekit.estimators import TileKinematics
from tilekit.kinematics import UnreachablePoseError

THETA = np.array([[0.3, 0.5, 0.7], [0.0, 1.2, 0.6], [0.1, 0.1, 1.0]])
# same frozen FK values as the kinematics tests
CENTRES = np.array([
    [-0.03297601524160965, 8.040129707486706, 61.38072161911339],
    [22.247393808918424, 12.471986675011715, 64.261480903583],
    [-8.344005322005355, 14.45224115633839, 46.205171503729396],
])


def test_params_round_trip_and_clone():
    est = TileKinematics(output="pose", tol=1e-8)
    params = est.get_params()
    assert params["output"] == "pose" and params["leg_length"] == 130.0
    twin = clone(est)
    assert twin.get_params() == params
    assert not hasattr(twin, "geometry_")
    est.set_params(theta_max=math.pi / 3)
    assert est.get_params()["theta_max"] == math.pi / 3


def test_transform_before_fit_raises():
    with pytest.raises(NotFittedError):
        TileKinematics().transform(THETA)


def test_transform_matches_oracle():
    est = TileKinematics().fit()
    assert est.n_features_in_ == 3
    np.testing.assert_allclose(est.transform(THETA), CENTRES, atol=1e-9)


def test_pose_output_is_spherical_form_of_centre():
    pose = TileKinematics(output="pose").fit().transform(THETA)
    delta, phi, r = pose.T
    xyz = np.column_stack([r * np.sin(phi) * np.cos(delta), r * np.sin(phi) * np.sin(delta), r * np.cos(phi)])
    np.testing.assert_allclose(xyz, CENTRES, atol=1e-9)


@pytest.mark.parametrize("output", ["cartesian", "pose"])
def test_inverse_round_trip(output):
    est = TileKinematics(output=output).fit(THETA)
    back = est.inverse_transform(est.transform(THETA))
    np.testing.assert_allclose(est.transform(back), est.transform(THETA), atol=1e-6)


def test_unreachable_targets():
    far = np.array([[0.0, 0.0, 500.0]])
    with pytest.raises(UnreachablePoseError):
        TileKinematics().fit().inverse_transform(far)
    theta = TileKinematics(on_unreachable="nan").fit().inverse_transform(np.vstack([CENTRES[:1], far]))
    assert np.isnan(theta[1]).all() and np.isfinite(theta[0]).all()


def test_bad_options_rejected_at_fit():
    with pytest.raises(ValueError):
        TileKinematics(output="polar").fit()
    with pytest.raises(ValueError):
        TileKinematics(theta_max=2.0).fit()
    with pytest.raises(ValueError):
        TileKinematics().fit().transform(np.zeros((2, 4)))


def test_works_inside_a_pipeline():
    degrees = FunctionTransformer(np.radians)
    pipe = make_pipeline(degrees, TileKinematics()).fit(np.degrees(THETA))
    np.testing.assert_allclose(pipe.transform(np.degrees(THETA)), CENTRES, atol=1e-9)
