"""Geometry of two or more tiles joined by an inextensible sheet.

The sheet between neighbours is attached along their closest facing plate
edges. The largest corner-to-corner distance across that edge pair (alpha)
is the least material a pair of poses needs; a configuration is jointly
reachable only while every gap's material length ``L >= alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .kinematics import Pose, TileGeometry, inverse_kinematics_batch
from .motion import MotionPattern, SinusoidalParams, sample_times

__all__ = [
    "TileState",
    "ArrayConfig",
    "EdgePair",
    "JointReachability",
    "LminResult",
    "LminSeries",
    "tilt_rotation",
    "end_effector_corners",
    "closest_edge_pair",
    "alpha",
    "alpha_from_corners",
    "is_reachable_jointly",
    "poses_reachable",
    "min_material_length_over_cycle",
    "sweep_lmin",
    "alpha_map",
    "increase_factor",
    "DEFAULT_SECOND_BASE",
]

DEFAULT_SECOND_BASE = (400.0, 0.0, 0.0)

# corner order is counter-clockwise seen from +z: (-,-), (+,-), (+,+), (-,+)
_CORNER_SIGNS = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
EDGE_NAMES = ("-y", "+x", "+y", "-x")


@dataclass(frozen=True)
class TileState:
    base: tuple[float, float, float] = (0.0, 0.0, 0.0)
    pose: Pose = field(default_factory=Pose)
    base_yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(float(v) for v in self.base))


@dataclass(frozen=True)
class ArrayConfig:
    """Ordered tile bases along the array with material length per gap."""

    bases: tuple[tuple[float, float, float], ...]
    lengths: tuple[float, ...]
    geom: TileGeometry = field(default_factory=TileGeometry)
    base_yaws: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        bases = tuple(tuple(float(v) for v in b) for b in self.bases)
        lengths = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "lengths", lengths)
        problems = []
        if len(bases) < 1:
            problems.append("at least one tile is required")
        if len(lengths) != max(len(bases) - 1, 0):
            problems.append(f"need {len(bases) - 1} material lengths, got {len(lengths)}")
        for i, value in enumerate(lengths):
            if value < 0:
                problems.append(f"material length L[{i}] must be >= 0, got {value}")
        if self.base_yaws is not None and len(self.base_yaws) != len(bases):
            problems.append("base_yaws must match the number of tiles")
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def linear(cls, n_tiles: int, D: float, L: float, geom: Optional[TileGeometry] = None) -> "ArrayConfig":
        bases = tuple((i * float(D), 0.0, 0.0) for i in range(n_tiles))
        return cls(bases=bases, lengths=(float(L),) * (n_tiles - 1), geom=geom or TileGeometry())

    @property
    def n_tiles(self) -> int:
        return len(self.bases)

    @property
    def distances(self) -> tuple[float, ...]:
        b = np.asarray(self.bases)
        return tuple(float(v) for v in np.linalg.norm(np.diff(b, axis=0), axis=1))

    def yaw(self, i: int) -> float:
        return 0.0 if self.base_yaws is None else float(self.base_yaws[i])

    def states(self, poses: Sequence[Pose]) -> list[TileState]:
        if len(poses) != self.n_tiles:
            raise ValueError(f"need {self.n_tiles} poses, got {len(poses)}")
        return [TileState(b, p, self.yaw(i)) for i, (b, p) in enumerate(zip(self.bases, poses))]

    def with_lengths(self, lengths) -> "ArrayConfig":
        return replace(self, lengths=tuple(lengths))


@dataclass(frozen=True)
class EdgePair:
    edge_x: int
    edge_y: int
    # corner indices paired across the gap: ((ix, iy), (ix, iy))
    pairing: tuple[tuple[int, int], tuple[int, int]]
    distances: tuple[float, float]

    @property
    def alpha(self) -> float:
        return max(self.distances)


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def tilt_rotation(pose: Pose) -> np.ndarray:
    """Plate orientation: tilt by ``phi`` about the horizontal axis normal to yaw ``delta``.

    Maps the plate's +z onto the pose direction ``n``; a level pose gives the
    identity exactly.
    """
    if pose.phi == 0.0:
        return np.eye(3)
    rz = _rot_z(pose.delta)
    return rz @ _rot_y(pose.phi) @ rz.T


def end_effector_corners(state: TileState, geom: TileGeometry) -> np.ndarray:
    """World coordinates of the four plate corners, shape (4, 3), counter-clockwise."""
    half = geom.plate_width / 2
    local = np.column_stack(
        [_CORNER_SIGNS[:, 0] * half, _CORNER_SIGNS[:, 1] * half, np.full(4, geom.plate_height)]
    )
    in_base = state.pose.cartesian() + local @ tilt_rotation(state.pose).T
    if state.base_yaw != 0.0:
        in_base = in_base @ _rot_z(state.base_yaw).T
    return in_base + np.asarray(state.base)


def _edge_pair_table(cx: np.ndarray, cy: np.ndarray):
    # cx, cy: (N, 4, 3). Returns per (edge_x, edge_y) the better pairing's
    # sum and max distance, plus which pairing won, each shaped (N, 4, 4).
    dist = np.linalg.norm(cx[:, :, None, :] - cy[:, None, :, :], axis=-1)
    a = np.arange(4)
    a1 = (a + 1) % 4
    # straight: a<->b, a+1<->b+1 ; crossed: a<->b+1, a+1<->b
    s1 = dist[:, a[:, None], a[None, :]]
    s2 = dist[:, a1[:, None], a1[None, :]]
    c1 = dist[:, a[:, None], a1[None, :]]
    c2 = dist[:, a1[:, None], a[None, :]]
    straight_sum = s1 + s2
    crossed_sum = c1 + c2
    use_crossed = crossed_sum < straight_sum
    total = np.where(use_crossed, crossed_sum, straight_sum)
    worst = np.where(use_crossed, np.maximum(c1, c2), np.maximum(s1, s2))
    first = np.where(use_crossed, c1, s1)
    second = np.where(use_crossed, c2, s2)
    return total, worst, use_crossed, first, second


def _select(total: np.ndarray, worst: np.ndarray) -> np.ndarray:
    # flat index of the winning edge pair per row: least sum, then least
    # alpha, then lowest (edge_x, edge_y)
    n = total.shape[0]
    t = total.reshape(n, 16)
    w = worst.reshape(n, 16)
    tied = t == t.min(axis=1, keepdims=True)
    w_masked = np.where(tied, w, np.inf)
    best = tied & (w_masked == w_masked.min(axis=1, keepdims=True))
    return np.argmax(best, axis=1)


def alpha_from_corners(cx, cy) -> np.ndarray:
    """Vectorised alpha for corner arrays shaped (N, 4, 3)."""
    cx = np.asarray(cx, dtype=float).reshape(-1, 4, 3)
    cy = np.asarray(cy, dtype=float).reshape(-1, 4, 3)
    total, worst, *_ = _edge_pair_table(cx, cy)
    pick = _select(total, worst)
    return worst.reshape(-1, 16)[np.arange(pick.size), pick]


def closest_edge_pair(cx, cy) -> EdgePair:
    """Facing edges of two plates and the corner pairing across the gap.

    Every one of the 16 edge pairs is scored by the smaller of its two
    corner pairings' summed distances (the non-crossing pairing); the pair
    with the least score wins.
    """
    cx = np.asarray(cx, dtype=float).reshape(1, 4, 3)
    cy = np.asarray(cy, dtype=float).reshape(1, 4, 3)
    total, worst, crossed, first, second = _edge_pair_table(cx, cy)
    k = int(_select(total, worst)[0])
    ex, ey = divmod(k, 4)
    ex1, ey1 = (ex + 1) % 4, (ey + 1) % 4
    if crossed[0, ex, ey]:
        pairing = ((ex, ey1), (ex1, ey))
    else:
        pairing = ((ex, ey), (ex1, ey1))
    return EdgePair(ex, ey, pairing, (float(first[0, ex, ey]), float(second[0, ex, ey])))


def alpha(state_x: TileState, state_y: TileState, geom: TileGeometry) -> float:
    cx = end_effector_corners(state_x, geom)
    cy = end_effector_corners(state_y, geom)
    return float(alpha_from_corners(cx, cy)[0])


@dataclass(frozen=True)
class JointReachability:
    reachable: bool
    margins: tuple[float, ...]
    alphas: tuple[float, ...]

    def __bool__(self) -> bool:
        return self.reachable


def is_reachable_jointly(states: Sequence[TileState], config: ArrayConfig) -> JointReachability:
    if len(states) != config.n_tiles:
        raise ValueError(f"need {config.n_tiles} tile states, got {len(states)}")
    alphas = [alpha(states[i], states[i + 1], config.geom) for i in range(len(states) - 1)]
    margins = tuple(L - a for L, a in zip(config.lengths, alphas))
    return JointReachability(all(m >= 0 for m in margins), margins, tuple(alphas))


def poses_reachable(geom: TileGeometry, poses: Sequence[Pose]) -> np.ndarray:
    """Boolean mask: which poses have in-limit leg angles (batched Newton IK)."""
    if not poses:
        return np.zeros(0, dtype=bool)
    targets = np.array([p.cartesian() for p in poses])
    theta, converged, _ = inverse_kinematics_batch(geom, targets)
    slack = 1e-9
    inside = np.all((theta >= geom.theta_min - slack) & (theta <= geom.theta_max + slack), axis=1)
    return converged & inside


@dataclass(frozen=True)
class LminResult:
    lmin: float
    worst_time: float
    times: np.ndarray = field(repr=False)
    alphas: np.ndarray = field(repr=False)
    reachable: np.ndarray = field(repr=False)

    @property
    def feasible(self) -> bool:
        """All sampled poses of both tiles are within the leg-angle limits."""
        return bool(self.reachable.all())

    @property
    def infeasible_times(self) -> np.ndarray:
        return self.times[~self.reachable]


def _pose_corners(poses: Sequence[Pose], base, base_yaw: float, geom: TileGeometry) -> np.ndarray:
    return np.stack([end_effector_corners(TileState(base, p, base_yaw), geom) for p in poses])


def min_material_length_over_cycle(
    pattern: MotionPattern,
    pair: Sequence[Sequence[float]] = ((0.0, 0.0, 0.0), DEFAULT_SECOND_BASE),
    geom: Optional[TileGeometry] = None,
    period: Optional[float] = None,
    dt: Optional[float] = None,
    first_index: int = 1,
    yaws: tuple[float, float] = (0.0, 0.0),
    check_reachability: bool = True,
) -> LminResult:
    """Largest alpha met by two neighbouring tiles over one period of ``pattern``.

    ``dt`` defaults to ``period / 200``. Poses outside the leg-angle limits do
    not abort the scan; they are marked in ``reachable``.
    """
    geom = geom or TileGeometry()
    period = pattern.period() if period is None else period
    times = sample_times(period, dt)
    poses_x = [pattern.pose(first_index, t) for t in times]
    poses_y = [pattern.pose(first_index + 1, t) for t in times]
    alphas = alpha_from_corners(
        _pose_corners(poses_x, pair[0], yaws[0], geom),
        _pose_corners(poses_y, pair[1], yaws[1], geom),
    )
    if check_reachability:
        ok = poses_reachable(geom, poses_x + poses_y)
        reachable = ok[: len(times)] & ok[len(times):]
    else:
        reachable = np.ones(len(times), dtype=bool)
    k = int(np.argmax(alphas))
    return LminResult(float(alphas[k]), float(times[k]), times, alphas, reachable)


@dataclass(frozen=True)
class LminSeries:
    axis: str
    values: np.ndarray
    lmin: np.ndarray
    feasible: np.ndarray

    def rows(self):
        for v, l, f in zip(self.values, self.lmin, self.feasible):
            yield float(v), float(l), bool(f)


_AXES = {"D": "D", "P_s": "P_s", "Ps": "P_s", "phi_max": "phi_max", "phimax": "phi_max"}


def sweep_lmin(
    axis: str,
    value_range: tuple[float, float],
    samples: int = 50,
    base_params: Optional[SinusoidalParams] = None,
    geom: Optional[TileGeometry] = None,
    dt: Optional[float] = None,
    check_reachability: bool = True,
) -> LminSeries:
    """L_min at ``samples`` evenly spaced values of one parameter, others held.

    ``axis`` is ``"D"`` (second base at ``(x, 0, 0)``), ``"P_s"`` or
    ``"phi_max"``.
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be one of D, P_s, phi_max; got {axis!r}")
    axis = _AXES[axis]
    lo, hi = (float(v) for v in value_range)
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValueError(f"invalid range [{lo}, {hi}]")
    if axis == "D" and lo < 0:
        raise ValueError("D range must be non-negative")
    if axis == "phi_max" and (lo < 0 or hi >= math.pi / 2):
        raise ValueError("phi_max range must lie in [0, pi/2)")
    base_params = base_params or SinusoidalParams()
    values = np.linspace(lo, hi, samples)
    lmin = np.empty(samples)
    feasible = np.empty(samples, dtype=bool)
    for k, v in enumerate(values):
        params, second = base_params, DEFAULT_SECOND_BASE
        if axis == "D":
            second = (float(v), 0.0, 0.0)
        else:
            params = replace(base_params, **{axis: float(v)})
        res = min_material_length_over_cycle(
            MotionPattern(params),
            ((0.0, 0.0, 0.0), second),
            geom,
            dt=dt,
            check_reachability=check_reachability,
        )
        lmin[k] = res.lmin
        feasible[k] = res.feasible
    return LminSeries(axis, values, lmin, feasible)


def alpha_map(
    deltas,
    phis,
    r: float = 70.0,
    second_base=(210.0, 0.0, 0.0),
    geom: Optional[TileGeometry] = None,
) -> np.ndarray:
    """alpha over a (delta, phi) grid for tile 1; tile 2 stays level at ``r``.

    Returns an array shaped (len(deltas), len(phis)).
    """
    geom = geom or TileGeometry()
    fixed = end_effector_corners(TileState(second_base, Pose(0.0, 0.0, r)), geom)
    deltas = np.asarray(deltas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    corners = np.stack(
        [end_effector_corners(TileState((0.0, 0.0, 0.0), Pose(d, p, r)), geom) for d in deltas for p in phis]
    )
    out = alpha_from_corners(corners, np.broadcast_to(fixed, corners.shape))
    return out.reshape(deltas.size, phis.size)


def increase_factor(D: float, w: float) -> float:
    """Traversable distance of a connected 3-tile array relative to packed tiles."""
    if not (D > 0 and w > 0):
        raise ValueError(f"D and w must be > 0, got D={D}, w={w}")
    return (2 * D + w) / (3 * w)

