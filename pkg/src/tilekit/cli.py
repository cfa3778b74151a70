"""``tilekit`` command line.

Exit codes: 0 success, 1 configuration or usage error, 2 infeasible pattern
or failed run.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import export
from .config import ConfigError, ToolkitConfig, config_from_dict, output_directory, parse_config
from .coupling import alpha_map, increase_factor, sweep_lmin
from .kinematics import KinematicsError
from .motion import PRESET_NAMES, MotionPattern, SinusoidalParams, preset, tuned_rolling_pattern, validate_pattern
from .simulator import OBJECTS, ExperimentConfig, PatternRefusedError, SimulationError, run_experiment
from .workspace import sweep_workspace

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2

GRID_D = (180.0, 200.0, 220.0, 240.0, 260.0, 280.0, 300.0, 320.0, 340.0)
GRID_L = (200.0, 150.0, 100.0, 50.0, 0.0)
# cells that have an entry in the published results table (the rest were untested)
PAPER_TESTED = {
    200.0: (280.0, 300.0, 320.0, 340.0),
    150.0: (220.0, 240.0, 260.0, 280.0, 300.0, 320.0, 340.0),
    100.0: (200.0, 220.0, 240.0, 260.0, 280.0, 300.0, 320.0, 340.0),
    50.0: (180.0, 200.0, 220.0, 240.0, 260.0, 280.0, 300.0, 320.0, 340.0),
    0.0: (180.0,),
}
GRID_PRESETS = ("A", "B")
TRAJECTORY_HEADER = ("t", "x_mm", "z_mm", "v_mm_s", "status")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for failed runs here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _angle(text: str) -> float:
    from .config import parse_quantity

    try:
        return parse_quantity(text, "angle")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _length(text: str) -> float:
    from .config import parse_quantity

    try:
        return parse_quantity(text, "length")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tilekit", description="Analysis and simulation for arrays of origami tiles joined by a flexible sheet.")
    parser.add_argument("--config", help="YAML config file (defaults used when omitted)")
    parser.add_argument("--out", help="output directory (overrides TILEKIT_OUT and the config)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("workspace", help="reachable end-effector point cloud")
    p.add_argument("--resolution", type=int, default=50)
    p.add_argument("--svg", action="store_true", help="also write an x-z scatter plot")

    p = sub.add_parser("alpha-map", help="alpha over (delta, phi) for one tile next to a level neighbour")
    p.add_argument("--D", type=_length, default=210.0, help="x of the second base, mm")
    p.add_argument("--r", type=_length, default=70.0)
    p.add_argument("--phi-max", type=_angle, default=math.pi / 6)
    p.add_argument("--delta-samples", type=int, default=50)
    p.add_argument("--phi-samples", type=int, default=50)

    p = sub.add_parser("lmin-sweep", help="minimum material length against one parameter")
    p.add_argument("--axis", required=True, choices=("D", "Ps", "phimax"))
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--no-reachability", action="store_true", help="skip the leg-angle check")

    p = sub.add_parser("pattern", help="pose trajectory of every tile")
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--duration", type=float, help="seconds (default one period)")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--tiles", type=int)

    for name, text in (("validate", "check a pattern against the array"), ("simulate", "run one transport trial")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--preset", choices=PRESET_NAMES)
        p.add_argument("--tune", action="store_true", help="raise phi_max to the array's limit plus slack")
        p.add_argument("--D", type=_length)
        p.add_argument("--L", type=_length)
        p.add_argument("--tiles", type=int)
        if name == "simulate":
            p.add_argument("--object", choices=sorted(OBJECTS))
            p.add_argument("--seed", type=int)
            p.add_argument("--time-limit", type=float)

    p = sub.add_parser("grid", help="success matrix over D and L")
    p.add_argument("--D-values", type=_length, nargs="+", default=list(GRID_D))
    p.add_argument("--L-values", type=_length, nargs="+", default=list(GRID_L))
    p.add_argument("--cells", choices=("published", "all"), default="published", help="which cells to run")
    p.add_argument("--presets", nargs="+", choices=PRESET_NAMES, default=list(GRID_PRESETS))
    p.add_argument("--time-limit", type=float)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("increase-factor", help="traversable distance relative to packed tiles")
    p.add_argument("--D", type=_length, required=True)
    p.add_argument("--w", type=_length, required=True)
    return parser


# ------------------------------------------------------------------ helpers


def _load(path: Optional[str]) -> ToolkitConfig:
    return parse_config(path) if path else config_from_dict({})


def _wants(cfg: ToolkitConfig, fmt: str) -> bool:
    return fmt in cfg.output.formats


def _with_pattern_flags(cfg: ToolkitConfig, args) -> ToolkitConfig:
    section = cfg.pattern
    if getattr(args, "preset", None):
        section = replace(section, pattern=preset(args.preset), preset=args.preset)
    if getattr(args, "tune", False):
        section = replace(section, tune_phi_max=True)
    return replace(cfg, pattern=section)


def _array(cfg: ToolkitConfig, args):
    return cfg.array.build(cfg.geometry, D=getattr(args, "D", None), L=getattr(args, "L", None),
                           n_tiles=getattr(args, "tiles", None))


def _pattern_rows(pattern: MotionPattern, n_tiles: int, duration: float, dt: float):
    steps = int(math.floor(duration / dt + 1e-9))
    for k in range(steps + 1):
        t = k * dt
        for i in range(1, n_tiles + 1):
            pose = pattern.pose(i, t)
            yield t, i, pose.delta, pose.phi, pose.r


# ---------------------------------------------------------------- commands


def cmd_workspace(cfg, args, out: Path) -> int:
    cloud = sweep_workspace(cfg.geometry, args.resolution)
    header = ("theta1", "theta2", "theta3", "x", "y", "z", "delta", "phi", "r")
    export.write_csv(out / "workspace.csv", header, cloud.rows())
    if args.svg:
        export.write_text(out / "workspace.svg", export.svg_scatter(
            cloud.points[:, 0], cloud.points[:, 2], "Reachable end-effector centres", "x (mm)", "z (mm)",
            color=cloud.points[:, 1]))
    print(f"{len(cloud)} points ({len(cloud.singular)} singular skipped), z in "
          f"[{cloud.points[:, 2].min():.3f}, {cloud.points[:, 2].max():.3f}] mm")
    return EXIT_OK


def cmd_alpha_map(cfg, args, out: Path) -> int:
    deltas = np.linspace(0.0, 2 * math.pi, args.delta_samples)
    phis = np.linspace(0.0, args.phi_max, args.phi_samples)
    grid = alpha_map(deltas, phis, r=args.r, second_base=(args.D, 0.0, 0.0), geom=cfg.geometry)
    rows = ((d, p, grid[i, j]) for i, d in enumerate(deltas) for j, p in enumerate(phis))
    export.write_csv(out / "alpha_map.csv", ("delta", "phi", "alpha"), rows)
    if _wants(cfg, "svg"):
        export.write_text(out / "alpha_map.svg", export.svg_heatmap(
            deltas, phis, grid.T, "alpha over tile-1 pose", "delta (rad)", "phi (rad)"))
    print(f"alpha in [{np.nanmin(grid):.3f}, {np.nanmax(grid):.3f}] mm")
    return EXIT_OK


def cmd_lmin_sweep(cfg, args, out: Path) -> int:
    params = cfg.pattern.pattern.params
    if not isinstance(params, SinusoidalParams):
        raise ConfigError(["lmin-sweep needs a sinusoidal pattern"])
    series = sweep_lmin(args.axis, (args.start, args.stop), args.samples, base_params=params,
                        geom=cfg.geometry, check_reachability=not args.no_reachability)
    name = {"D": "D", "Ps": "P_s", "phimax": "phi_max"}[args.axis]
    export.write_csv(out / f"lmin_{args.axis}.csv", (name, "lmin", "feasible"), series.rows())
    if _wants(cfg, "svg"):
        export.write_text(out / f"lmin_{args.axis}.svg", export.svg_lines(
            series.values, {"L_min": series.lmin}, f"L_min against {name}", name, "L_min (mm)"))
    print(f"{args.samples} samples, L_min in [{np.nanmin(series.lmin):.3f}, {np.nanmax(series.lmin):.3f}] mm, "
          f"{int(series.feasible.sum())} reachable")
    return EXIT_OK


def cmd_pattern(cfg, args, out: Path) -> int:
    pattern = preset(args.preset) if args.preset else cfg.pattern.pattern
    n = args.tiles or cfg.array.n_tiles
    duration = args.duration if args.duration is not None else pattern.period()
    if not (args.dt > 0 and duration >= 0):
        raise ConfigError(["pattern: need dt > 0 and duration >= 0"])
    name = (args.preset or pattern.name or "pattern").replace(":", "_")
    export.write_csv(out / f"pattern_{name}.csv", ("t", "tile", "delta", "phi", "r"),
                     _pattern_rows(pattern, n, duration, args.dt))
    print(f"{n} tiles over {duration:g} s")
    return EXIT_OK


def cmd_validate(cfg, args, out: Path) -> int:
    cfg = _with_pattern_flags(cfg, args)
    array = _array(cfg, args)
    pattern = cfg.pattern.build(array)
    held = pattern.relieved(cfg.backlash()) if cfg.backlash() > 0 else pattern
    report = validate_pattern(held, array)
    payload = report.to_dict()
    payload["phi_max"] = getattr(pattern.params, "phi_max", None)
    if _wants(cfg, "json"):
        export.write_json(out / "validate.json", payload)
    print(json.dumps(export._jsonable(payload), sort_keys=True))
    return EXIT_OK if report.valid else EXIT_FAILED


def _experiment(cfg: ToolkitConfig, array, pattern, obj=None, seed=None, time_limit=None) -> ExperimentConfig:
    sim = cfg.simulation
    return ExperimentConfig(
        array=array,
        pattern=pattern,
        obj=obj or sim.obj,
        time_limit=time_limit or sim.time_limit,
        dt=sim.dt,
        seed=sim.seed if seed is None else seed,
        start_jitter=sim.start_jitter,
        strain_tolerance=sim.strain_tolerance,
        backlash=cfg.backlash(),
        g=sim.g,
    )


def cmd_simulate(cfg, args, out: Path) -> int:
    cfg = _with_pattern_flags(cfg, args)
    array = _array(cfg, args)
    pattern = cfg.pattern.build(array)
    exp = _experiment(cfg, array, pattern, OBJECTS.get(args.object) if args.object else None, args.seed, args.time_limit)
    try:
        result = run_experiment(exp)
    except PatternRefusedError as exc:
        summary = {"outcome": "fail", "status": "invalid-pattern", "reason": str(exc),
                   "report": exc.report.to_dict() if exc.report is not None else None}
        if _wants(cfg, "json"):
            export.write_json(out / "outcome.json", summary)
        print(json.dumps(export._jsonable(summary), sort_keys=True))
        return EXIT_FAILED
    summary = result.summary()
    summary["net_displacement_mm"] = result.net_displacement
    summary["phi_max"] = getattr(pattern.params, "phi_max", None)
    export.write_csv(out / "trajectory.csv", TRAJECTORY_HEADER,
                     zip(result.t, result.x, result.z, result.v, result.status))
    if _wants(cfg, "json"):
        export.write_json(out / "outcome.json", summary)
    if _wants(cfg, "svg"):
        export.write_text(out / "trajectory.svg", export.svg_lines(
            result.t, {"x": result.x}, "Object position", "t (s)", "x (mm)"))
    print(json.dumps(export._jsonable(summary), sort_keys=True))
    return EXIT_OK if result.success else EXIT_FAILED


def grid_cell(cfg: ToolkitConfig, D: float, L: float, presets: Sequence[str], time_limit=None) -> str:
    """``success`` when every preset transports the object, ``invalid`` when
    the sheet cannot span the gap or a pattern is refused, else ``fail``."""
    array = cfg.array.build(cfg.geometry, D=D, L=L)
    if L > 0 and D - cfg.geometry.plate_width > L:
        return "invalid"
    slack = cfg.pattern.slack
    for name in presets:
        try:
            if name in ("A", "B"):
                pattern = tuned_rolling_pattern(name, array, slack=slack)
                backlash = slack
            else:
                pattern, backlash = preset(name), 0.0
            exp = _experiment(cfg, array, pattern, time_limit=time_limit)
            result = run_experiment(replace(exp, backlash=backlash))
        except PatternRefusedError:
            return "invalid"
        except SimulationError:
            return "invalid"
        if not result.success:
            return "fail"
    return "success"


def _grid_job(job):
    return grid_cell(*job)


def cmd_grid(cfg, args, out: Path) -> int:
    Ds = list(args.D_values)
    Ls = list(args.L_values)
    jobs, where = [], []
    for L in Ls:
        for D in Ds:
            tested = args.cells == "all" or D in PAPER_TESTED.get(L, ())
            if tested:
                jobs.append((cfg, D, L, tuple(args.presets), args.time_limit))
                where.append((L, D))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_grid_job, jobs))
    else:
        results = [_grid_job(j) for j in jobs]
    cells = dict(zip(where, results))
    rows = [[L] + [cells.get((L, D), "untested") for D in Ds] for L in Ls]
    export.write_csv(out / "grid.csv", ["L"] + [export.format_value(D) for D in Ds], rows)
    counts = {k: sum(r.count(k) for r in rows) for k in ("success", "fail", "invalid", "untested")}
    print(", ".join(f"{k}: {v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_increase_factor(cfg, args, out: Path) -> int:
    print(f"{increase_factor(args.D, args.w):.3f}")
    return EXIT_OK


COMMANDS = {
    "workspace": cmd_workspace,
    "alpha-map": cmd_alpha_map,
    "lmin-sweep": cmd_lmin_sweep,
    "pattern": cmd_pattern,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "grid": cmd_grid,
    "increase-factor": cmd_increase_factor,
}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load(args.config)
        out = output_directory(cfg, args.out)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KinematicsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
