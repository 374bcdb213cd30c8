"""CSV, JSON manifest and SVG writers for sweep results.

CSV layout: a ``# liouville-pt v<version>`` line, a header row, then one
row per grid point with the sweep value followed by ``Re``/``Im`` column
pairs for every method and observable. Numbers use 17 significant digits,
``,`` as delimiter and LF line endings.

The manifest is a flat JSON object; its keys are listed in
:data:`MANIFEST_KEYS`.
"""
from __future__ import annotations

import csv
import io
import json
import math
from html import escape
from pathlib import Path

from . import __version__

MANIFEST_KEYS = (
    "software",
    "version",
    "model",
    "parameters",
    "sweep",
    "methods",
    "order",
    "reg_c",
    "fock_cutoff",
    "threads",
    "wall_time_s",
    "failed_points",
    "points",
)

COLORS = {"exact": "#1f3fbf", "order0": "#000000", "dm_pt": "#cc2222", "amp_pt": "#228833"}
DASHES = {"exact": "2,3", "order0": "", "dm_pt": "8,4", "amp_pt": ""}
WIDTHS = {"exact": 2.0, "order0": 1.6, "dm_pt": 1.6, "amp_pt": 0.8}


def fmt(x: float) -> str:
    return "%.17g" % x


def csv_text(param: str, results: dict, methods, observable_names) -> str:
    buf = io.StringIO()
    buf.write(f"# liouville-pt v{__version__}\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = [param]
    for m in methods:
        for name in observable_names:
            header += [f"{m}:{name}:Re", f"{m}:{name}:Im"]
    writer.writerow(header)
    grid = results[methods[0]].grid
    for i, x in enumerate(grid):
        row = [fmt(x)]
        for m in methods:
            obs = results[m].observables
            for name in observable_names:
                v = complex(obs[name][i])
                row += [fmt(v.real), fmt(v.imag)]
        writer.writerow(row)
    return buf.getvalue()


def write_csv(path, param: str, results: dict, methods, observable_names) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(csv_text(param, results, methods, observable_names))
    return path


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x


def point_record(p) -> dict:
    d = p.diagnostics
    return {
        "value": p.value,
        "min_eig_dm_pt": d.get("min_eig_dm_pt"),
        "min_eig_amp_pt": d.get("min_eig_amp_pt"),
        "solvability_max": d.get("solvability_max"),
        "z0_condition": d.get("z0_condition"),
        "reg_c": d.get("reg_c"),
        "pinv_method": d.get("pinv_method"),
        "errors": dict(p.errors),
    }


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def svg_plot(title: str, xlabel: str, grid, curves: dict, width: int = 640, height: int = 400) -> str:
    """Line plot of real ``curves`` (label -> values) as a standalone SVG."""
    left, right, top, bottom = 70, 130, 30, 50
    pw, ph = width - left - right, height - top - bottom
    xs = [float(x) for x in grid]
    finite = [v for vals in curves.values() for v in vals if math.isfinite(v)]
    ymin, ymax = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if ymax - ymin < 1e-300:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad
    xmin, xmax = min(xs), max(xs)
    if xmax == xmin:
        xmax = xmin + 1.0

    def px(x):
        return left + (x - xmin) / (xmax - xmin) * pw

    def py(y):
        return top + (ymax - y) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{left + pw / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>',
    ]
    for k in range(5):
        xv = xmin + k * (xmax - xmin) / 4
        yv = ymin + k * (ymax - ymin) / 4
        out.append(f'<text x="{px(xv):.1f}" y="{top + ph + 16}" text-anchor="middle" font-family="sans-serif" font-size="10">{xv:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{py(yv) + 3:.1f}" text-anchor="end" font-family="sans-serif" font-size="10">{yv:.3g}</text>')
    for i, (label, vals) in enumerate(curves.items()):
        color = COLORS.get(label, "#666666")
        dash = DASHES.get(label, "")
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        # NaN points break the polyline into segments
        segments, cur = [], []
        for x, y in zip(xs, vals):
            if math.isfinite(y):
                cur.append(f"{px(x):.2f},{py(y):.2f}")
            elif cur:
                segments.append(cur)
                cur = []
        if cur:
            segments.append(cur)
        for seg in segments:
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="{WIDTHS.get(label, 1.2)}"{dash_attr} points="{" ".join(seg)}"/>'
            )
        ly = top + 14 + 18 * i
        lx = left + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plotted_value(name: str, values) -> list[float]:
    """Quantity drawn for an observable: ``|<A>|`` for amplitudes, real part for occupations."""
    if name.startswith("n_"):
        return [complex(v).real for v in values]
    return [abs(complex(v)) for v in values]


def write_svgs(directory, param: str, results: dict, methods, observable_names) -> list[Path]:
    directory = Path(directory)
    paths = []
    for name in observable_names:
        curves = {m: plotted_value(name, results[m].observables[name]) for m in methods}
        label = f"<{name}>" if name.startswith("n_") else f"|<{name}>|"
        svg = svg_plot(label, param, results[methods[0]].grid, curves)
        path = directory / f"{name}.svg"
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(svg)
        paths.append(path)
    return paths
