"""Quasi-static transport of an object along a linear tile array (x-z section).

The surface is rebuilt from the tile poses every step: plate segments joined
by the connective sheet, which either hangs as a circular arc of its full
length or, once the gap reaches that length, runs as a straight taut chord.
The object is a point contact travelling along this moving profile under
gravity, rolling resistance or Coulomb friction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .coupling import ArrayConfig, TileState
from .kinematics import TileGeometry
from .motion import MotionPattern

__all__ = [
    "GRAVITY",
    "SimulationError",
    "UnsupportedConfigurationError",
    "InvalidConfigurationError",
    "PatternRefusedError",
    "LineSegment",
    "SlackArc",
    "GapSegment",
    "SurfaceProfile",
    "SurfaceSample",
    "ObjectSpec",
    "SimState",
    "ExperimentConfig",
    "ExperimentResult",
    "OBJECTS",
    "plate_cross_section",
    "material_shape",
    "arc_half_angle",
    "surface_profile",
    "surface_height_slope",
    "step_object",
    "run_experiment",
]

GRAVITY = 9810.0  # mm/s^2
_JOIN_TOL = 1e-6
_YAW_TOL = 1e-9


class SimulationError(ValueError):
    pass


class UnsupportedConfigurationError(SimulationError):
    pass


class InvalidConfigurationError(SimulationError):
    pass


class PatternRefusedError(SimulationError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# -- surface geometry -------------------------------------------------------


@dataclass(frozen=True)
class LineSegment:
    """Straight piece of surface: a tile plate or a taut sheet."""

    kind: str  # "plate" | "taut"
    start: tuple[float, float]
    end: tuple[float, float]
    strain: float = 0.0

    @property
    def x_range(self) -> tuple[float, float]:
        return self.start[0], self.end[0]

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    def height_slope(self, x: float) -> tuple[float, float]:
        (x0, z0), (x1, z1) = self.start, self.end
        dx = x1 - x0
        if dx <= 0:
            return max(z0, z1), 0.0
        slope = (z1 - z0) / dx
        return z0 + slope * (x - x0), slope


@dataclass(frozen=True)
class SlackArc:
    """Circular arc of fixed length hanging below the chord ``start``-``end``."""

    start: tuple[float, float]
    end: tuple[float, float]
    length: float
    radius: float
    half_angle: float
    centre: tuple[float, float]
    kind: str = "slack-arc"

    @property
    def x_range(self) -> tuple[float, float]:
        return self.start[0], self.end[0]

    @property
    def sag(self) -> float:
        """Depth of the arc below its chord midpoint."""
        return self.radius * (1 - math.cos(self.half_angle))

    def _direction_limits(self):
        cx, cz = self.centre
        a0 = math.atan2(self.start[1] - cz, self.start[0] - cx)
        a1 = math.atan2(self.end[1] - cz, self.end[0] - cx)
        return a0, a1

    def _on_arc(self, angle: float) -> bool:
        # the arc runs counter-clockwise from start to end through the bottom
        a0, _ = self._direction_limits()
        span = 2 * self.half_angle
        rel = (angle - a0) % (2 * math.pi)
        return rel <= span + 1e-12

    def height_slope(self, x: float) -> tuple[float, float]:
        cx, cz = self.centre
        rho = self.radius
        u = max(-rho, min(rho, x - cx))
        h = math.sqrt(max(rho * rho - u * u, 0.0))
        best = None
        for z in (cz - h, cz + h):
            if self._on_arc(math.atan2(z - cz, u)) and (best is None or z < best):
                best = z
        if best is None:
            # numerically just outside the arc's angular span: use the chord end
            (x0, z0), (x1, z1) = self.start, self.end
            best = z0 if abs(x - x0) < abs(x - x1) else z1
        dz = best - cz
        if abs(dz) < 1e-12:
            slope = math.copysign(1e12, -u * dz) if u else 0.0
        else:
            slope = -u / dz
        return best, slope

    def points(self, n: int = 64) -> np.ndarray:
        a0, _ = self._direction_limits()
        angles = a0 + np.linspace(0.0, 2 * self.half_angle, n)
        return np.column_stack(
            [self.centre[0] + self.radius * np.cos(angles), self.centre[1] + self.radius * np.sin(angles)]
        )


@dataclass(frozen=True)
class GapSegment:
    start: tuple[float, float]
    end: tuple[float, float]
    kind: str = "gap"

    @property
    def x_range(self) -> tuple[float, float]:
        return self.start[0], self.end[0]


Segment = Union[LineSegment, SlackArc, GapSegment]


@dataclass(frozen=True)
class SurfaceProfile:
    segments: tuple[Segment, ...]
    strain_violation: bool = False

    @property
    def x_min(self) -> float:
        return self.segments[0].start[0]

    @property
    def x_max(self) -> float:
        return self.segments[-1].end[0]

    @property
    def max_strain(self) -> float:
        return max((s.strain for s in self.segments if isinstance(s, LineSegment)), default=0.0)

    def locate(self, x: float) -> Optional[Segment]:
        if x < self.x_min or x > self.x_max:
            return None
        for seg in self.segments:
            if x <= seg.end[0]:
                return seg
        return self.segments[-1]


@dataclass(frozen=True)
class SurfaceSample:
    z: float
    slope: float  # angle beta, rad; negative when the surface falls towards +x
    vertical_velocity: float
    in_gap: bool = False
    segment_kind: str = ""


def plate_cross_section(state: TileState, geom: TileGeometry) -> LineSegment:
    """Plate as seen in the x-z plane; requires yaw 0 or pi."""
    pose = state.pose
    if abs(state.base_yaw) > _YAW_TOL:
        raise UnsupportedConfigurationError("cross-sections need base_yaw = 0")
    if pose.phi == 0.0:
        psi = 0.0
    else:
        d = pose.delta % (2 * math.pi)
        if min(d, 2 * math.pi - d) <= _YAW_TOL:
            psi = pose.phi
        elif abs(d - math.pi) <= _YAW_TOL:
            psi = -pose.phi
        else:
            raise UnsupportedConfigurationError(f"delta must be 0 or pi for a linear array, got {pose.delta}")
    s, c = math.sin(psi), math.cos(psi)
    lift = pose.r + geom.plate_height
    cx = state.base[0] + lift * s
    cz = state.base[2] + lift * c
    half = geom.plate_width / 2
    return LineSegment("plate", (cx - half * c, cz + half * s), (cx + half * c, cz - half * s))


def arc_half_angle(chord: float, length: float, rel_tol: float = 1e-9) -> float:
    """Half-angle ``theta`` of a circular arc with chord ``c`` and length ``L``.

    Solves ``sin(theta) / theta = c / L`` on ``(0, pi)`` by bisection.
    """
    ratio = chord / length
    if ratio >= 1.0:
        return 0.0
    lo, hi = 0.0, math.pi
    while hi - lo > rel_tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if math.sin(mid) / mid > ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def material_shape(p_a, p_b, L: float, strain_tolerance: float = 0.02) -> Union[LineSegment, SlackArc]:
    """Sheet of length ``L`` hung between two plate edges."""
    if not L > 0:
        raise ValueError(f"L must be > 0, got {L}")
    (xa, za), (xb, zb) = p_a, p_b
    c = math.hypot(xb - xa, zb - za)
    if c >= L:
        strain = c / L - 1.0
        return LineSegment("taut", (xa, za), (xb, zb), strain=strain)
    theta = arc_half_angle(c, L)
    rho = L / (2 * theta)
    if c == 0.0:
        ux, uz = 1.0, 0.0
    else:
        ux, uz = (xb - xa) / c, (zb - za) / c
    # unit normal on the downward side of the chord
    mx, mz = uz, -ux
    if mz > 0:
        mx, mz = -mx, -mz
    off = rho * math.cos(theta)
    centre = ((xa + xb) / 2 - mx * off, (za + zb) / 2 - mz * off)
    return SlackArc((xa, za), (xb, zb), L, rho, theta, centre)


def surface_profile(
    states: Sequence[TileState],
    config: ArrayConfig,
    t: float = 0.0,
    strain_tolerance: float = 0.02,
) -> SurfaceProfile:
    """Plates and sheets across the whole array, ordered along +x."""
    geom = config.geom
    plates = [plate_cross_section(s, geom) for s in states]
    segments: list[Segment] = []
    violation = False
    for i, plate in enumerate(plates):
        segments.append(plate)
        if i == len(plates) - 1:
            break
        nxt = plates[i + 1]
        p_a, p_b = plate.end, nxt.start
        if p_b[0] < p_a[0]:
            raise InvalidConfigurationError(f"plates {i} and {i + 1} overlap at t={t}")
        L = config.lengths[i]
        if L == 0:
            segments.append(GapSegment(p_a, p_b))
            continue
        seg = material_shape(p_a, p_b, L, strain_tolerance)
        if isinstance(seg, LineSegment) and seg.strain > strain_tolerance:
            violation = True
        segments.append(seg)
    return SurfaceProfile(tuple(segments), violation)


def surface_height_slope(
    profile: SurfaceProfile,
    x: float,
    next_profile: Optional[SurfaceProfile] = None,
    dt: Optional[float] = None,
) -> SurfaceSample:
    seg = profile.locate(x)
    if seg is None or isinstance(seg, GapSegment):
        return SurfaceSample(math.nan, math.nan, math.nan, in_gap=True, segment_kind="gap")
    z, dzdx = seg.height_slope(x)
    vz = 0.0
    if next_profile is not None and dt:
        nseg = next_profile.locate(x)
        if nseg is not None and not isinstance(nseg, GapSegment):
            vz = (nseg.height_slope(x)[0] - z) / dt
    return SurfaceSample(z, math.atan(dzdx), vz, segment_kind=seg.kind)


# -- object and dynamics -----------------------------------------------------


@dataclass(frozen=True)
class ObjectSpec:
    kind: str = "rolling-cylinder"  # | "sliding-disk" | "sliding-block"
    size: float = 20.0  # contact radius or half-width, mm
    mass: float = 100.0  # g
    mu_s: float = 0.4
    mu_k: float = 0.3
    mu_r: float = 0.01
    inertia_factor: float = 2.0 / 3.0

    def __post_init__(self):
        problems = []
        if self.kind not in ("rolling-cylinder", "sliding-disk", "sliding-block"):
            problems.append(f"unknown object kind {self.kind!r}")
        if not (self.size > 0 and self.mass > 0):
            problems.append("size and mass must be > 0")
        if not self.mu_s >= self.mu_k >= 0:
            problems.append(f"need mu_s >= mu_k >= 0, got {self.mu_s}, {self.mu_k}")
        if self.mu_r < 0:
            problems.append("mu_r must be >= 0")
        if not 0 < self.inertia_factor <= 1:
            problems.append("inertia_factor must lie in (0, 1]")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def rolls(self) -> bool:
        return self.kind == "rolling-cylinder"


OBJECTS = {
    "cylinder": ObjectSpec("rolling-cylinder", size=20.0, mass=100.0),
    "disk": ObjectSpec("sliding-disk", size=30.0, mass=20.0, inertia_factor=1.0),
    "cube": ObjectSpec("sliding-block", size=20.0, mass=80.0, inertia_factor=1.0),
}

ON_SURFACE = "on-surface"
IN_GAP = "in-gap-failure"
SUCCESS = "success"
TIMEOUT = "timeout"
STRAIN = "strain-violation"


@dataclass(frozen=True)
class SimState:
    t: float = 0.0
    x: float = 0.0
    v: float = 0.0
    status: str = ON_SURFACE

    @property
    def terminal(self) -> bool:
        return self.status != ON_SURFACE


def _resisted(v: float, drive: float, resist: float, dt: float, at_rest_threshold: float) -> float:
    """Advance a speed under a driving and an opposing (Coulomb-like) acceleration."""
    if v == 0.0:
        if abs(drive) <= at_rest_threshold:
            return 0.0
        return v + (drive - math.copysign(resist, drive)) * dt
    new = v + (drive - math.copysign(resist, v)) * dt
    if new * v < 0 and abs(drive) <= resist:
        return 0.0
    return new


def step_object(
    state: SimState,
    spec: ObjectSpec,
    profile: SurfaceProfile,
    next_profile: Optional[SurfaceProfile],
    dt: float,
    vibrating: bool = False,
    g: float = GRAVITY,
    boundary: Optional[float] = None,
) -> SimState:
    """One explicit step of the point-contact transport model."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if state.terminal:
        return state
    sample = surface_height_slope(profile, state.x)
    t = state.t + dt
    if sample.in_gap:
        return SimState(t, state.x, 0.0, IN_GAP)
    beta = sample.slope
    sb, cb = math.sin(beta), math.cos(beta)
    if spec.rolls:
        drive = -g * sb * spec.inertia_factor
        resist = spec.mu_r * g * cb
        v = _resisted(state.v, drive, resist, dt, resist)
    else:
        drive = -g * sb
        mu_rest = spec.mu_k if vibrating else spec.mu_s
        resist = spec.mu_k * g * cb
        v = _resisted(state.v, drive, resist, dt, mu_rest * g * cb)
    x = state.x + v * cb * dt
    status = ON_SURFACE
    edge = profile.x_max if boundary is None else boundary
    if x > edge:
        status = SUCCESS
    else:
        target = next_profile if next_profile is not None else profile
        if target.locate(x) is None or isinstance(target.locate(x), GapSegment):
            status = IN_GAP
    return SimState(t, x, v, status)


# -- experiments -------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    array: ArrayConfig
    pattern: MotionPattern
    obj: ObjectSpec = field(default_factory=ObjectSpec)
    time_limit: float = 20.0
    dt: float = 1e-3
    seed: int = 0
    start_jitter: float = 0.0
    strain_tolerance: float = 0.02
    backlash: float = 0.0
    g: float = GRAVITY
    validate: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.time_limit > 0:
            raise ValueError(f"time_limit must be > 0, got {self.time_limit}")
        if self.start_jitter < 0:
            raise ValueError("start_jitter must be >= 0")
        if self.backlash < 0:
            raise ValueError("backlash must be >= 0")


@dataclass
class ExperimentResult:
    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    v: np.ndarray
    status: list[str]
    outcome: str
    time_to_detection: Optional[float]
    max_strain: float
    min_margin: float
    report: object = None

    @property
    def success(self) -> bool:
        return self.outcome == SUCCESS

    @property
    def net_displacement(self) -> float:
        return float(self.x[-1] - self.x[0])

    def summary(self) -> dict:
        return {
            "outcome": "success" if self.success else "fail",
            "status": self.outcome,
            "time_to_detection_s": self.time_to_detection,
            "max_strain": self.max_strain,
            "min_margin_mm": self.min_margin,
        }


def _states_at(array: ArrayConfig, pattern: MotionPattern, t: float) -> list[TileState]:
    poses = [pattern.pose(i + 1, t) for i in range(array.n_tiles)]
    return array.states(poses)


def _sheet_strain(array: ArrayConfig, states: Sequence[TileState]) -> float:
    # largest relative stretch any connected gap would need
    plates = [plate_cross_section(s, array.geom) for s in states]
    worst = 0.0
    for i, L in enumerate(array.lengths):
        if L > 0:
            (xa, za), (xb, zb) = plates[i].end, plates[i + 1].start
            worst = max(worst, math.hypot(xb - xa, zb - za) / L - 1.0)
    return worst


def _vibrating(pattern: MotionPattern) -> bool:
    return pattern.vibration is not None and pattern.vibration.amplitude > 0


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Integrate one transport trial at fixed ``dt`` until a terminal status."""
    from .motion import validate_pattern

    # backlash lets the tiles give way to a taut sheet: material and leg
    # limits are judged on the relieved poses, while the object rides on the
    # commanded surface
    held = cfg.pattern.relieved(cfg.backlash) if cfg.backlash > 0 else cfg.pattern
    report = None
    if cfg.validate:
        report = validate_pattern(held, cfg.array)
        if not report.valid:
            raise PatternRefusedError("pattern violates the material or leg-angle limits", report)

    rng = np.random.default_rng(cfg.seed)
    n_steps = int(round(cfg.time_limit / cfg.dt))
    profile = surface_profile(_states_at(cfg.array, cfg.pattern, 0.0), cfg.array, 0.0, cfg.strain_tolerance)
    first = profile.segments[0]
    x0 = 0.5 * (first.start[0] + first.end[0])
    if cfg.start_jitter:
        x0 += float(rng.uniform(-cfg.start_jitter, cfg.start_jitter))
    state = SimState(0.0, x0, 0.0)
    vib = _vibrating(cfg.pattern)

    ts = np.empty(n_steps + 1)
    xs = np.empty(n_steps + 1)
    zs = np.empty(n_steps + 1)
    vs = np.empty(n_steps + 1)
    status = []
    max_strain = _sheet_strain(cfg.array, _states_at(cfg.array, held, 0.0))

    def record(k, st, prof):
        ts[k], xs[k], vs[k] = st.t, st.x, st.v
        seg = prof.locate(st.x)
        zs[k] = math.nan if seg is None or isinstance(seg, GapSegment) else seg.height_slope(st.x)[0]
        status.append(st.status)

    record(0, state, profile)
    k = 0
    for k in range(1, n_steps + 1):
        t_next = k * cfg.dt
        nxt = surface_profile(_states_at(cfg.array, cfg.pattern, t_next), cfg.array, t_next, cfg.strain_tolerance)
        if held is cfg.pattern:
            max_strain = max(max_strain, nxt.max_strain)
        else:
            max_strain = max(max_strain, _sheet_strain(cfg.array, _states_at(cfg.array, held, t_next)))
        state = step_object(state, cfg.obj, profile, nxt, cfg.dt, vibrating=vib, g=cfg.g)
        state = replace(state, t=t_next)
        profile = nxt
        record(k, state, profile)
        if state.terminal:
            break
    if not state.terminal:
        state = replace(state, status=TIMEOUT)
        status[-1] = TIMEOUT
    n = k + 1
    outcome = STRAIN if max_strain > cfg.strain_tolerance else state.status
    min_margin = min(report.margins) if report is not None and report.margins else math.nan
    return ExperimentResult(
        t=ts[:n],
        x=xs[:n],
        z=zs[:n],
        v=vs[:n],
        status=status,
        outcome=outcome,
        time_to_detection=state.t if state.status == SUCCESS else None,
        max_strain=max_strain,
        min_margin=min_margin,
        report=report,
    )
