"""File output: CSV tables, JSON reports and small self-contained SVG plots.

Every float is written with ``%.9g`` so repeated runs produce identical bytes
and a written table reads back to the same 9 significant digits.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "format_value",
    "csv_text",
    "write_csv",
    "read_csv",
    "write_json",
    "svg_scatter",
    "svg_lines",
    "svg_heatmap",
    "write_text",
]


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        text = "%.9g" % v
        return "0" if text == "-0" else text
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return write_text(path, csv_text(header, rows))


def _parse_cell(cell: str):
    try:
        return float(cell)
    except ValueError:
        return cell


def read_csv(path) -> tuple[list[str], list[list]]:
    """Read a table written by :func:`write_csv`; numeric cells become floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[_parse_cell(c) for c in row] for row in reader]
    return header, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else float("%.9g" % v)
    return obj


def write_json(path, payload) -> Path:
    return write_text(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------- SVG

_W, _H, _PAD = 640, 480, 60
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(lo: float, hi: float, a: float, b: float):
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        lo, hi = (lo - 1.0, lo + 1.0) if math.isfinite(lo) else (0.0, 1.0)
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(title: str, xlabel: str, ylabel: str, body: list[str], xr, yr) -> str:
    f = lambda v: "%.6g" % v
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_PAD / 2}" text-anchor="middle" font-size="16">{title}</text>',
        f'<text x="{_W / 2}" y="{_H - 15}" text-anchor="middle" font-size="13">{xlabel}</text>',
        f'<text x="15" y="{_H / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 15 {_H / 2})">{ylabel}</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 15}" font-size="10">{f(xr[0])}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 15}" font-size="10" text-anchor="end">{f(xr[1])}</text>',
        f'<text x="{_PAD - 5}" y="{_H - _PAD}" font-size="10" text-anchor="end">{f(yr[0])}</text>',
        f'<text x="{_PAD - 5}" y="{_PAD + 10}" font-size="10" text-anchor="end">{f(yr[1])}</text>',
    ]
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _finite_range(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return 0.0, 1.0
    return float(arr.min()), float(arr.max())


def svg_scatter(x, y, title: str = "", xlabel: str = "x", ylabel: str = "y",
                color=None, radius: float = 1.2, max_points: Optional[int] = 20000) -> str:
    """Scatter plot; ``color`` (optional, same length) is mapped onto a blue-red ramp."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx = np.arange(x.size)
    if max_points and x.size > max_points:
        idx = idx[:: int(math.ceil(x.size / max_points))]
    xr, yr = _finite_range(x), _finite_range(y)
    sx = _scale(*xr, _PAD, _W - _PAD)
    sy = _scale(*yr, _H - _PAD, _PAD)
    cs = None
    if color is not None:
        color = np.asarray(color, dtype=float)
        cs = _scale(*_finite_range(color), 0.0, 1.0)
    body = []
    for i in idx:
        if not (math.isfinite(x[i]) and math.isfinite(y[i])):
            continue
        fill = _PALETTE[0] if cs is None else _ramp(cs(color[i]))
        body.append(f'<circle cx="{sx(x[i]):.2f}" cy="{sy(y[i]):.2f}" r="{radius}" fill="{fill}"/>')
    return _frame(title, xlabel, ylabel, body, xr, yr)


def svg_lines(x, series: dict, title: str = "", xlabel: str = "x", ylabel: str = "y") -> str:
    """One polyline per named series over a shared x axis; NaNs break the line."""
    x = np.asarray(x, dtype=float)
    allv = np.concatenate([np.asarray(v, dtype=float) for v in series.values()]) if series else np.zeros(1)
    xr, yr = _finite_range(x), _finite_range(allv)
    sx = _scale(*xr, _PAD, _W - _PAD)
    sy = _scale(*yr, _H - _PAD, _PAD)
    body = []
    for k, (name, values) in enumerate(series.items()):
        colour = _PALETTE[k % len(_PALETTE)]
        runs, current = [], []
        for xi, yi in zip(x, np.asarray(values, dtype=float)):
            if math.isfinite(yi):
                current.append(f"{sx(xi):.2f},{sy(yi):.2f}")
            elif current:
                runs.append(current)
                current = []
        if current:
            runs.append(current)
        for run in runs:
            body.append(f'<polyline points="{" ".join(run)}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        body.append(f'<text x="{_W - _PAD - 5}" y="{_PAD + 15 * (k + 1)}" font-size="11" text-anchor="end" fill="{colour}">{name}</text>')
    return _frame(title, xlabel, ylabel, body, xr, yr)


def _ramp(u: float) -> str:
    u = min(max(u, 0.0), 1.0)
    return "#%02x%02x%02x" % (int(255 * u), int(80 * (1 - abs(2 * u - 1))), int(255 * (1 - u)))


def svg_heatmap(xs, ys, grid, title: str = "", xlabel: str = "x", ylabel: str = "y") -> str:
    """Cell ``grid[j, i]`` drawn at ``(xs[i], ys[j])``; NaN cells are grey."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    grid = np.asarray(grid, dtype=float)
    xr, yr = _finite_range(xs), _finite_range(ys)
    cs = _scale(*_finite_range(grid), 0.0, 1.0)
    cw = (_W - 2 * _PAD) / max(len(xs), 1)
    ch = (_H - 2 * _PAD) / max(len(ys), 1)
    body = []
    for j in range(len(ys)):
        for i in range(len(xs)):
            v = grid[j, i]
            fill = "#bbbbbb" if not math.isfinite(v) else _ramp(cs(v))
            x0 = _PAD + i * cw
            y0 = _H - _PAD - (j + 1) * ch
            body.append(f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" fill="{fill}"/>')
    return _frame(title, xlabel, ylabel, body, xr, yr)
