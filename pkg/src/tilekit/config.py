"""Toolkit configuration file (YAML).

Every section is optional; missing values fall back to the library defaults.
Numeric values may carry a unit suffix (``"20 deg"``, ``"0.35rad"``,
``"240 mm"``, ``"5 s"``, ``"0.25 Hz"``) and may use ``pi`` in simple
arithmetic (``"pi/9"``).  Angles are stored in radians.  Validation reports
every problem found, not just the first one.
"""
from __future__ import annotations

import ast
import math
import operator
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import yaml

from .coupling import ArrayConfig
from .kinematics import TileGeometry
from .motion import (
    SLACK_COMPENSATION,
    MotionPattern,
    SinusoidalParams,
    StateCycleParams,
    VibrationParams,
    pattern_presets,
    tuned_rolling_pattern,
)
from .simulator import OBJECTS, ObjectSpec

__all__ = [
    "ConfigError",
    "ArraySection",
    "PatternSection",
    "SimulationSection",
    "OutputSection",
    "ToolkitConfig",
    "parse_config",
    "config_from_dict",
    "parse_quantity",
    "output_directory",
]


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


# ------------------------------------------------------------------ quantities

_UNITS = {
    "rad": ("angle", 1.0),
    "deg": ("angle", math.pi / 180.0),
    "mm": ("length", 1.0),
    "cm": ("length", 10.0),
    "m": ("length", 1000.0),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "hz": ("frequency", 1.0),
}
_QUANTITY = re.compile(r"^\s*(.*?)\s*(rad|deg|mm|cm|m|ms|s|hz)?\s*$", re.IGNORECASE)
_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _arith(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(text)

    return ev(ast.parse(text, mode="eval"))


def parse_quantity(value, dimension: str) -> float:
    """Number (already in base units) or string with optional unit suffix.

    ``dimension`` is one of ``angle``, ``length``, ``time``, ``frequency``
    or ``number``; a suffix of another dimension raises ``ValueError``.
    """
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a number, got {value!r}")
    m = _QUANTITY.match(value)
    number, unit = m.group(1), m.group(2)
    factor = 1.0
    if unit:
        unit_dim, factor = _UNITS[unit.lower()]
        if unit_dim != dimension:
            raise ValueError(f"unit '{unit}' is a {unit_dim} unit, expected {dimension}")
    try:
        return _arith(number) * factor
    except (ValueError, SyntaxError, ZeroDivisionError):
        raise ValueError(f"cannot read a number from {value!r}") from None


# -------------------------------------------------------------------- schema

# key -> dimension, or a python type for non-numeric keys
_GEOMETRY = {
    "leg_length": "length",
    "base_radius": "length",
    "leg_azimuths": ("list", "angle"),
    "theta_min": "angle",
    "theta_max": "angle",
    "plate_width": "length",
    "plate_height": "length",
}
_ARRAY = {
    "n_tiles": int,
    "D": "length",
    "L": "length",
    "bases": ("list", ("list", "length")),
    "lengths": ("list", "length"),
}
_SINUSOID = {
    "yaw": "angle",
    "phi_max": "angle",
    "f_s": "frequency",
    "P_s": "angle",
    "r_0": "length",
    "h_max": "length",
    "f_h": "frequency",
    "P_h": "angle",
}
_STATE = {
    "phi_forward": "angle",
    "phi_backward": "angle",
    "r_high": "length",
    "r_low": "length",
    "dwell": "time",
    "neighbor_offset": int,
}
_VIBRATION = {"frequency": "frequency", "amplitude": "length"}
_PATTERN = {
    "preset": str,
    "kind": str,
    "params": dict,
    "vibration": dict,
    "tune_phi_max": bool,
    "slack": "angle",
}
_OBJECT = {
    "kind": str,
    "size": "length",
    "mass": "number",
    "mu_s": "number",
    "mu_k": "number",
    "mu_r": "number",
    "inertia_factor": "number",
}
_SIMULATION = {
    "object": (str, dict),
    "dt": "time",
    "time_limit": "time",
    "seed": int,
    "start_jitter": "length",
    "strain_tolerance": "number",
    "backlash": "angle",
    "g": "number",
}
_OUTPUT = {"directory": str, "formats": ("list", str)}
_SECTIONS = {
    "geometry": _GEOMETRY,
    "array": _ARRAY,
    "pattern": _PATTERN,
    "simulation": _SIMULATION,
    "output": _OUTPUT,
}
_FORMATS = ("csv", "json", "svg")


def _convert(value, spec, where: str, problems: list):
    if isinstance(spec, tuple) and spec and spec[0] == "list":
        if not isinstance(value, (list, tuple)):
            problems.append(f"{where}: expected a list, got {value!r}")
            return None
        out = [_convert(v, spec[1], f"{where}[{i}]", problems) for i, v in enumerate(value)]
        return None if any(v is None for v in out) else out
    if isinstance(spec, tuple):  # alternatives of python types
        if not isinstance(value, spec):
            problems.append(f"{where}: expected one of {[t.__name__ for t in spec]}, got {value!r}")
            return None
        return value
    if spec is int:
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f"{where}: expected an integer, got {value!r}")
            return None
        return value
    if spec in (str, dict, bool):
        if value is None and spec is dict:
            return None
        if not isinstance(value, spec):
            problems.append(f"{where}: expected {spec.__name__}, got {value!r}")
            return None
        return value
    try:
        return parse_quantity(value, spec)
    except ValueError as exc:
        problems.append(f"{where}: {exc}")
        return None


def _read_section(raw, schema: dict, where: str, problems: list) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected a mapping, got {type(raw).__name__}")
        return {}
    out = {}
    for key, value in raw.items():
        if key not in schema:
            problems.append(f"{where}: unknown key '{key}'")
            continue
        conv = _convert(value, schema[key], f"{where}.{key}", problems)
        if conv is not None or (schema[key] is dict and value is None):
            out[key] = conv
    return out


# ------------------------------------------------------------------ sections


@dataclass(frozen=True)
class ArraySection:
    n_tiles: int = 3
    D: float = 400.0
    L: float = 300.0
    bases: Optional[tuple] = None
    lengths: Optional[tuple] = None

    def build(self, geom: TileGeometry, D: Optional[float] = None, L: Optional[float] = None,
              n_tiles: Optional[int] = None) -> ArrayConfig:
        """Array for this section; explicit arguments override the file values."""
        if self.bases is not None and D is None and n_tiles is None:
            array = ArrayConfig(self.bases, (self.L,) * (len(self.bases) - 1), geom)
        else:
            array = ArrayConfig.linear(n_tiles or self.n_tiles, self.D if D is None else D, self.L, geom)
        if L is not None:
            return array.with_lengths((L,) * (array.n_tiles - 1))
        if self.lengths is not None:
            return array.with_lengths(self.lengths)
        return array


@dataclass(frozen=True)
class PatternSection:
    pattern: MotionPattern = field(default_factory=lambda: MotionPattern(SinusoidalParams()))
    preset: Optional[str] = None
    tune_phi_max: bool = False
    slack: float = SLACK_COMPENSATION

    def build(self, array: ArrayConfig) -> MotionPattern:
        """The pattern to run on ``array``; rolling presets are tuned when requested."""
        if not self.tune_phi_max:
            return self.pattern
        if not isinstance(self.pattern.params, SinusoidalParams):
            raise ValueError("tune_phi_max applies to sinusoidal patterns only")
        p = self.pattern.params
        return tuned_rolling_pattern(
            self.preset or "A",
            array,
            slack=self.slack,
            h_max=p.h_max,
            yaw=p.yaw,
            f_s=p.f_s,
            P_s=p.P_s,
            r_0=p.r_0,
            f_h=p.f_h,
            P_h=p.P_h,
        )

    def backlash(self) -> float:
        return self.slack if self.tune_phi_max else 0.0


@dataclass(frozen=True)
class SimulationSection:
    obj: ObjectSpec = field(default_factory=lambda: OBJECTS["cylinder"])
    dt: float = 1e-3
    time_limit: float = 20.0
    seed: int = 0
    start_jitter: float = 0.0
    strain_tolerance: float = 0.02
    backlash: Optional[float] = None  # None: follow the pattern section
    g: float = 9810.0


@dataclass(frozen=True)
class OutputSection:
    directory: str = "."
    formats: tuple = _FORMATS


@dataclass(frozen=True)
class ToolkitConfig:
    geometry: TileGeometry = field(default_factory=TileGeometry)
    array: ArraySection = field(default_factory=ArraySection)
    pattern: PatternSection = field(default_factory=PatternSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    output: OutputSection = field(default_factory=OutputSection)

    def backlash(self) -> float:
        b = self.simulation.backlash
        return self.pattern.backlash() if b is None else b


def _build_dataclass(cls, values: dict, where: str, problems: list):
    try:
        return cls(**values)
    except (ValueError, TypeError) as exc:
        problems.append(f"{where}: {exc}")
        return None


def _pattern_section(raw: dict, problems: list) -> PatternSection:
    presets = pattern_presets()
    name = raw.get("preset")
    kind = raw.get("kind")
    base = None
    if name is not None:
        if name not in presets:
            problems.append(f"pattern.preset: unknown preset '{name}' (choose from {', '.join(presets)})")
        else:
            base = presets[name]
    if kind is not None and kind not in ("sinusoidal", "state-cycle"):
        problems.append(f"pattern.kind: must be 'sinusoidal' or 'state-cycle', got '{kind}'")
        kind = None
    if base is not None and kind is not None and kind != base.kind:
        problems.append(f"pattern.kind: '{kind}' does not match preset '{name}' ({base.kind})")
    if base is None:
        kind = kind or "sinusoidal"
        base = MotionPattern(SinusoidalParams() if kind == "sinusoidal" else StateCycleParams())
    schema = _SINUSOID if base.kind == "sinusoidal" else _STATE
    params = _read_section(raw.get("params"), schema, "pattern.params", problems)
    pattern = base
    if params:
        try:
            pattern = base.with_params(**params)
        except (ValueError, TypeError) as exc:
            problems.append(f"pattern.params: {exc}")
    if "vibration" in raw:
        vib_raw = raw["vibration"]
        if vib_raw is None:
            pattern = MotionPattern(pattern.params, None, pattern.name)
        else:
            vib = _read_section(vib_raw, _VIBRATION, "pattern.vibration", problems)
            start = pattern.vibration or VibrationParams()
            built = _build_dataclass(VibrationParams, {**start.__dict__, **vib}, "pattern.vibration", problems)
            if built is not None:
                pattern = MotionPattern(pattern.params, built, pattern.name)
    tune = raw.get("tune_phi_max", False)
    if tune and pattern.kind != "sinusoidal":
        problems.append("pattern.tune_phi_max: only sinusoidal patterns can be tuned")
    slack = raw.get("slack", SLACK_COMPENSATION)
    if slack < 0:
        problems.append(f"pattern.slack: must be >= 0, got {slack}")
    return PatternSection(pattern=pattern, preset=name if base is not None else None, tune_phi_max=tune, slack=slack)


def config_from_dict(raw: Optional[dict]) -> ToolkitConfig:
    """Validate a mapping (e.g. loaded YAML) into a :class:`ToolkitConfig`."""
    problems: list[str] = []
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError([f"top level: expected a mapping, got {type(raw).__name__}"])
    for key in raw:
        if key not in _SECTIONS:
            problems.append(f"unknown section '{key}'")
    sec = {name: _read_section(raw.get(name), schema, name, problems) for name, schema in _SECTIONS.items()}

    geo = dict(sec["geometry"])
    if "leg_azimuths" in geo:
        if len(geo["leg_azimuths"]) != 3:
            problems.append("geometry.leg_azimuths: exactly 3 values required")
            geo.pop("leg_azimuths")
        else:
            geo["leg_azimuths"] = tuple(geo["leg_azimuths"])
    geometry = _build_dataclass(TileGeometry, geo, "geometry", problems) or TileGeometry()

    arr = dict(sec["array"])
    for key in ("D", "L"):
        if key in arr and arr[key] < 0:
            problems.append(f"array.{key}: must be >= 0, got {arr[key]}")
    if "n_tiles" in arr and arr["n_tiles"] < 1:
        problems.append(f"array.n_tiles: must be >= 1, got {arr['n_tiles']}")
    if "bases" in arr:
        if any(len(b) != 3 for b in arr["bases"]):
            problems.append("array.bases: each base needs 3 coordinates")
        arr["bases"] = tuple(tuple(b) for b in arr["bases"])
    if "lengths" in arr:
        if any(v < 0 for v in arr["lengths"]):
            problems.append("array.lengths: every length must be >= 0")
        arr["lengths"] = tuple(arr["lengths"])
    array = ArraySection(**arr)
    if not problems:
        try:
            array.build(geometry)
        except ValueError as exc:
            problems.append(f"array: {exc}")

    pattern = _pattern_section(sec["pattern"], problems)

    sim = dict(sec["simulation"])
    obj_raw = sim.pop("object", None)
    obj = OBJECTS["cylinder"]
    if isinstance(obj_raw, str):
        if obj_raw not in OBJECTS:
            problems.append(f"simulation.object: unknown object '{obj_raw}' (choose from {', '.join(OBJECTS)})")
        else:
            obj = OBJECTS[obj_raw]
    elif isinstance(obj_raw, dict):
        vals = _read_section(obj_raw, _OBJECT, "simulation.object", problems)
        start = OBJECTS.get(vals.get("kind", ""), None)
        if start is None:
            start = OBJECTS["cylinder"] if vals.get("kind", "rolling-cylinder") == "rolling-cylinder" else ObjectSpec(vals["kind"], inertia_factor=1.0)
        merged = {f.name: getattr(start, f.name) for f in fields(ObjectSpec)}
        merged.update(vals)
        obj = _build_dataclass(ObjectSpec, merged, "simulation.object", problems) or obj
    for key in ("dt", "time_limit"):
        if key in sim and not sim[key] > 0:
            problems.append(f"simulation.{key}: must be > 0, got {sim[key]}")
    for key in ("start_jitter", "backlash", "strain_tolerance"):
        if key in sim and sim[key] < 0:
            problems.append(f"simulation.{key}: must be >= 0, got {sim[key]}")
    simulation = SimulationSection(obj=obj, **sim)

    out = dict(sec["output"])
    if "formats" in out:
        bad = [f for f in out["formats"] if f not in _FORMATS]
        if bad:
            problems.append(f"output.formats: unknown format(s) {bad} (choose from {list(_FORMATS)})")
        out["formats"] = tuple(out["formats"])
    output = OutputSection(**out)

    if problems:
        raise ConfigError(problems)
    return ToolkitConfig(geometry, array, pattern, simulation, output)


def parse_config(path) -> ToolkitConfig:
    """Load and validate a YAML config file; an empty file gives all defaults."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from None
    return config_from_dict(raw)


def output_directory(cfg: ToolkitConfig, override: Optional[str] = None) -> Path:
    """Command-line flag, then ``TILEKIT_OUT``, then the config file."""
    if override:
        return Path(override)
    env = os.environ.get("TILEKIT_OUT")
    if env:
        return Path(env)
    return Path(cfg.output.directory)
