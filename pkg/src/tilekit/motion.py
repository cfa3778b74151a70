"""Per-tile pose trajectories for the linear array.

Two pattern families are supported: the phase-shifted sinusoid (tilt and
height oscillations with a constant phase offset between neighbours) and the
six-state cycle used for sliding objects. Either may carry a vertical
vibration overlay on ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .kinematics import Pose

__all__ = [
    "SinusoidalParams",
    "StateCycleParams",
    "VibrationParams",
    "MotionPattern",
    "sinusoidal_pose",
    "state_cycle_pose",
    "state_index",
    "apply_vibration",
    "clamp_phi_max",
    "pattern_presets",
    "preset",
    "PRESET_NAMES",
    "SLACK_COMPENSATION",
    "PHI_MAX_CAP",
    "PHI_MAX_CEILING",
    "ROLLING_H_MAX",
    "GapReport",
    "ValidityReport",
    "validate_pattern",
    "sample_times",
    "shared_phi_limit",
    "tuned_rolling_pattern",
]

SLACK_COMPENSATION = math.pi / 18
PHI_MAX_CAP = 5 * math.pi / 36
PHI_MAX_CEILING = 25 * math.pi / 180
ROLLING_H_MAX = 15.0


@dataclass(frozen=True)
class SinusoidalParams:
    yaw: float = 0.0
    phi_max: float = math.pi / 9
    f_s: float = 1.0
    P_s: float = 0.0
    r_0: float = 70.0
    h_max: float = 0.0
    f_h: float = 1.0
    P_h: float = 0.0

    def __post_init__(self):
        problems = []
        if self.phi_max < 0:
            problems.append(f"phi_max must be >= 0, got {self.phi_max}")
        if self.h_max < 0:
            problems.append(f"h_max must be >= 0, got {self.h_max}")
        if not (self.f_s > 0 and self.f_h > 0):
            problems.append(f"frequencies must be > 0, got f_s={self.f_s}, f_h={self.f_h}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class StateCycleParams:
    phi_forward: float = 5 * math.pi / 36
    phi_backward: float = math.pi / 12
    r_high: float = 70.0
    r_low: float = 40.0
    dwell: float = 5.0
    neighbor_offset: int = 3

    def __post_init__(self):
        problems = []
        if not (self.phi_forward > 0 and self.phi_backward > 0):
            problems.append("phi_forward and phi_backward must be > 0")
        if not self.r_high > self.r_low > 0:
            problems.append(f"need r_high > r_low > 0, got {self.r_high}, {self.r_low}")
        if not self.dwell > 0:
            problems.append(f"dwell must be > 0, got {self.dwell}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class VibrationParams:
    frequency: float = 5.0
    amplitude: float = 5.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.frequency > 0:
            raise ValueError(f"frequency must be > 0, got {self.frequency}")


def _common_period(*freqs: float) -> float:
    """Smallest T with every ``f * T`` an integer (frequencies rationalised)."""
    fr = [Fraction(f).limit_denominator(10**6) for f in freqs]
    num = math.gcd(*(f.numerator for f in fr))
    den = math.lcm(*(f.denominator for f in fr))
    return float(Fraction(den, num) if num else 0)


@dataclass(frozen=True)
class MotionPattern:
    params: Union[SinusoidalParams, StateCycleParams]
    vibration: Optional[VibrationParams] = None
    name: str = field(default="", compare=False)
    # tilt given back to backlash when the sheet pulls on the tiles
    tilt_relief: float = 0.0

    @property
    def kind(self) -> str:
        return "sinusoidal" if isinstance(self.params, SinusoidalParams) else "state-cycle"

    def pose(self, tile_index: int, t: float) -> Pose:
        if isinstance(self.params, SinusoidalParams):
            pose = sinusoidal_pose(self.params, tile_index, t)
        else:
            pose = state_cycle_pose(self.params, tile_index, t)
        if self.tilt_relief > 0:
            pose = Pose(pose.delta, max(pose.phi - self.tilt_relief, 0.0), pose.r)
        if self.vibration is not None:
            pose = apply_vibration(pose, self.vibration, t)
        return pose

    def period(self) -> float:
        p = self.params
        if isinstance(p, SinusoidalParams):
            freqs = [p.f_s] if p.h_max == 0 else [p.f_s, p.f_h]
        else:
            freqs = [1.0 / (6 * p.dwell)]
        if self.vibration is not None and self.vibration.amplitude > 0:
            freqs.append(self.vibration.frequency)
        return _common_period(*freqs)

    def with_params(self, **changes) -> "MotionPattern":
        return replace(self, params=replace(self.params, **changes))

    def relieved(self, backlash: float) -> "MotionPattern":
        """Poses the tiles settle into when backlash gives up to ``backlash`` rad of tilt."""
        if backlash < 0:
            raise ValueError(f"backlash must be >= 0, got {backlash}")
        return replace(self, tilt_relief=self.tilt_relief + backlash)


def sinusoidal_pose(params: SinusoidalParams, tile_index: int, t: float) -> Pose:
    k = tile_index - 1
    phi = params.phi_max * math.sin(2 * math.pi * params.f_s * t + params.P_s * k)
    r = params.r_0 + params.h_max * math.sin(2 * math.pi * params.f_h * t + params.P_h * k)
    return Pose(delta=params.yaw, phi=phi, r=r)


def state_index(params: StateCycleParams, tile_index: int, t: float) -> int:
    """1-based state number of a tile at time ``t``."""
    return (math.floor(t / params.dwell) + params.neighbor_offset * (tile_index - 1)) % 6 + 1


def state_cycle_pose(params: StateCycleParams, tile_index: int, t: float) -> Pose:
    p = params
    table = {
        1: (0.0, p.phi_forward, p.r_high),
        2: (math.pi, p.phi_backward, p.r_high),
        3: (0.0, 0.0, p.r_high),
        4: (math.pi, p.phi_backward, p.r_low),
        5: (0.0, 0.0, p.r_low),
        6: (0.0, p.phi_forward, p.r_high),
    }
    delta, phi, r = table[state_index(p, tile_index, t)]
    return Pose(delta=delta, phi=phi, r=r)


def apply_vibration(pose: Pose, vib: VibrationParams, t: float) -> Pose:
    if vib.amplitude == 0:
        return pose
    r = pose.r + vib.amplitude * math.sin(2 * math.pi * vib.frequency * t)
    return Pose(delta=pose.delta, phi=pose.phi, r=r)


def clamp_phi_max(
    shared_limit: float,
    slack: float = SLACK_COMPENSATION,
    cap: float = PHI_MAX_CAP,
    ceiling: float = PHI_MAX_CEILING,
) -> float:
    """Tilt amplitude actually commanded once backlash compensation is added.

    The workspace-derived limit is capped first, then widened by ``slack``,
    never beyond ``ceiling``.
    """
    if shared_limit < 0:
        raise ValueError(f"shared_limit must be >= 0, got {shared_limit}")
    return min(min(shared_limit, cap) + slack, ceiling)


PRESET_NAMES = ("A", "B", "state-100:240", "state-150:280", "state-200:320")


def pattern_presets() -> dict[str, MotionPattern]:
    half_pi = math.pi / 2
    sliding_vibration = VibrationParams(frequency=5.0, amplitude=5.0)
    return {
        "A": MotionPattern(
            SinusoidalParams(f_s=0.25, f_h=0.25, P_s=half_pi, P_h=half_pi, h_max=ROLLING_H_MAX),
            name="A",
        ),
        "B": MotionPattern(
            SinusoidalParams(f_s=0.25, f_h=0.5, P_s=half_pi, P_h=0.0, h_max=ROLLING_H_MAX),
            name="B",
        ),
        "state-100:240": MotionPattern(
            StateCycleParams(5 * math.pi / 36, math.pi / 12, 70.0, 40.0),
            vibration=sliding_vibration,
            name="state-100:240",
        ),
        "state-150:280": MotionPattern(
            StateCycleParams(math.pi / 6, math.pi / 12, 80.0, 40.0),
            vibration=sliding_vibration,
            name="state-150:280",
        ),
        "state-200:320": MotionPattern(
            StateCycleParams(5 * math.pi / 36, math.pi / 12, 85.0, 40.0),
            vibration=sliding_vibration,
            name="state-200:320",
        ),
    }


def preset(name: str) -> MotionPattern:
    presets = pattern_presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return presets[name]


def sample_times(period: float, dt: Optional[float] = None, samples: int = 200) -> np.ndarray:
    """Uniform times covering ``[0, period)``; ``dt`` defaults to ``period / samples``."""
    if period <= 0:
        raise ValueError(f"period must be > 0, got {period}")
    if dt is None:
        dt = period / samples
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    n = max(1, int(math.ceil(period / dt - 1e-9)))
    return np.arange(n) * dt


@dataclass(frozen=True)
class GapReport:
    index: int
    length: float
    lmin: float
    worst_time: float
    connected: bool

    @property
    def margin(self) -> float:
        return self.length - self.lmin

    @property
    def feasible(self) -> bool:
        return (not self.connected) or self.length >= self.lmin


@dataclass(frozen=True)
class ValidityReport:
    gaps: tuple[GapReport, ...]
    tile_reachable: tuple[bool, ...]
    unreachable_times: tuple[tuple[float, ...], ...]
    period: float
    dt: float

    @property
    def valid(self) -> bool:
        return all(g.feasible for g in self.gaps) and all(self.tile_reachable)

    @property
    def margins(self) -> tuple[float, ...]:
        return tuple(g.margin for g in self.gaps if g.connected)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "period_s": self.period,
            "dt_s": self.dt,
            "gaps": [
                {
                    "index": g.index,
                    "L_mm": g.length,
                    "lmin_mm": g.lmin,
                    "margin_mm": g.margin if g.connected else None,
                    "worst_time_s": g.worst_time,
                    "connected": g.connected,
                    "feasible": g.feasible,
                }
                for g in self.gaps
            ],
            "tiles": [
                {"index": i + 1, "reachable": ok, "unreachable_times_s": list(ts)}
                for i, (ok, ts) in enumerate(zip(self.tile_reachable, self.unreachable_times))
            ],
        }


def validate_pattern(pattern: MotionPattern, config, period: Optional[float] = None, dt: Optional[float] = None) -> ValidityReport:
    """Check every gap's material against L_min and every tile's poses against the leg limits.

    Gaps with ``L == 0`` carry no sheet and are reported as unconnected.
    """
    from .coupling import alpha_from_corners, end_effector_corners, poses_reachable, TileState

    period = pattern.period() if period is None else period
    times = sample_times(period, dt)
    dt = float(times[1] - times[0]) if len(times) > 1 else period
    geom = config.geom
    poses = [[pattern.pose(i + 1, t) for t in times] for i in range(config.n_tiles)]
    corners = [
        np.stack([end_effector_corners(TileState(config.bases[i], p, config.yaw(i)), geom) for p in poses[i]])
        for i in range(config.n_tiles)
    ]
    gaps = []
    for i, L in enumerate(config.lengths):
        a = alpha_from_corners(corners[i], corners[i + 1])
        k = int(np.argmax(a))
        gaps.append(GapReport(i, L, float(a[k]), float(times[k]), connected=L > 0))
    reach, bad_times = [], []
    for i in range(config.n_tiles):
        ok = poses_reachable(geom, poses[i])
        reach.append(bool(ok.all()))
        bad_times.append(tuple(float(t) for t in times[~ok]))
    return ValidityReport(tuple(gaps), tuple(reach), tuple(bad_times), float(period), dt)


def _plates_clear(pattern: MotionPattern, config, times, clearance: float = 1.0) -> bool:
    # facing plate edges stay ``clearance`` mm apart along the array axis
    from .coupling import TileState, end_effector_corners

    axis = np.asarray(config.bases[-1], dtype=float) - np.asarray(config.bases[0], dtype=float)
    norm = np.linalg.norm(axis)
    if config.n_tiles < 2 or norm == 0:
        return True
    axis /= norm
    for t in times:
        proj = [
            end_effector_corners(TileState(b, pattern.pose(i + 1, t), config.yaw(i)), config.geom) @ axis
            for i, b in enumerate(config.bases)
        ]
        for a, b in zip(proj, proj[1:]):
            if a.max() + clearance > b.min():
                return False
    return True


def shared_phi_limit(
    pattern: MotionPattern,
    config,
    upper: float = math.pi / 2 - 1e-6,
    tol: float = 1e-6,
    dt: Optional[float] = None,
) -> float:
    """Largest tilt amplitude a sinusoidal pattern may use on ``config``.

    Bisects ``phi_max`` on ``[0, upper]`` subject to every connected gap
    keeping ``L >= L_min``, all poses staying within the leg limits and no
    two plates colliding. Returns 0 when even level motion fails.
    """
    if not isinstance(pattern.params, SinusoidalParams):
        raise TypeError("shared_phi_limit needs a sinusoidal pattern")

    def ok(phi_max: float) -> bool:
        trial = pattern.with_params(phi_max=phi_max)
        report = validate_pattern(trial, config, dt=dt)
        if not report.valid:
            return False
        return _plates_clear(trial, config, sample_times(trial.period(), dt))

    if not ok(0.0):
        return 0.0
    if ok(upper):
        return upper
    lo, hi = 0.0, upper
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def tuned_rolling_pattern(
    name: str,
    config,
    slack: float = 0.0,
    h_max: float = ROLLING_H_MAX,
    dt: Optional[float] = None,
    **overrides,
) -> MotionPattern:
    """Preset A or B with ``h_max`` set and ``phi_max`` raised to the array's limit.

    The workspace limit comes from :func:`shared_phi_limit`; ``slack`` is then
    added through :func:`clamp_phi_max` to make up for backlash. The result is
    lowered again if the widened tilt would make neighbouring plates collide.
    ``overrides`` replace further sinusoid parameters (e.g. ``P_s``) before
    the limit is searched.
    """
    base = preset(name).with_params(h_max=h_max, **overrides)
    limit = shared_phi_limit(base, config, dt=dt)
    commanded = clamp_phi_max(limit, slack=slack) if slack > 0 else limit
    times = sample_times(base.period(), dt)
    if commanded > limit and not _plates_clear(base.with_params(phi_max=commanded), config, times):
        lo, hi = limit, commanded
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            if _plates_clear(base.with_params(phi_max=mid), config, times):
                lo = mid
            else:
                hi = mid
        commanded = lo
    return base.with_params(phi_max=commanded)
