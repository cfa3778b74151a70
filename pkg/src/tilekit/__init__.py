"""Kinematics, coupling analysis and transport simulation for arrays of
three-legged origami tiles joined by a flexible sheet."""
from .kinematics import (
    KinematicsError,
    LegAngles,
    LimitViolationError,
    Pose,
    SingularConfigurationError,
    TileGeometry,
    UnreachablePoseError,
    forward_kinematics,
    inverse_kinematics,
)
from .workspace import sweep_workspace, workspace_bounds
from .coupling import (
    ArrayConfig,
    TileState,
    alpha,
    increase_factor,
    is_reachable_jointly,
    min_material_length_over_cycle,
    sweep_lmin,
)
from .motion import MotionPattern, SinusoidalParams, StateCycleParams, VibrationParams, preset, validate_pattern
from .simulator import ExperimentConfig, ObjectSpec, run_experiment
from .estimators import TileKinematics

__version__ = "0.1.0"

__all__ = [
    "KinematicsError",
    "LegAngles",
    "LimitViolationError",
    "Pose",
    "SingularConfigurationError",
    "TileGeometry",
    "UnreachablePoseError",
    "forward_kinematics",
    "inverse_kinematics",
    "sweep_workspace",
    "workspace_bounds",
    "ArrayConfig",
    "TileState",
    "alpha",
    "increase_factor",
    "is_reachable_jointly",
    "min_material_length_over_cycle",
    "sweep_lmin",
    "MotionPattern",
    "SinusoidalParams",
    "StateCycleParams",
    "VibrationParams",
    "preset",
    "validate_pattern",
    "ExperimentConfig",
    "ObjectSpec",
    "run_experiment",
    "TileKinematics",
]
