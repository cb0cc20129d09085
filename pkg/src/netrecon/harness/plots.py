"""Figure data from horse-race reports: long CSV tables and SVG line charts.

The SVG files are written by hand (one polyline per method, periods on the
x axis) so no plotting library is needed.
"""

from __future__ import annotations

import csv
import json
import math
from html import escape
from pathlib import Path

from ..metrics import METRIC_COLUMNS
from .horserace import HorseraceReport

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939")

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=70, right=150, top=40, bottom=50)


def _rows(reports):
    """``(method, t, metric -> value)`` triples from reports or report rows."""
    if isinstance(reports, HorseraceReport):
        reports = [reports]
    out = []
    for rep in reports:
        if isinstance(rep, HorseraceReport):
            for c in rep.cells:
                if c.status == "ok":
                    out.append((c.method, c.t, c.metrics))
        else:
            if rep.get("status", "ok") == "ok":
                out.append((rep["method"], rep["t"], rep))
    return out


def long_table(reports, metric: str) -> list[tuple[str, str, str, float]]:
    """``(metric, method, t, value)`` rows with finite values, in report order."""
    rows = []
    for method, t, metrics in _rows(reports):
        v = metrics.get(metric)
        if v is not None and math.isfinite(float(v)):
            rows.append((metric, method, str(t), float(v)))
    return rows


def read_long_csv(path) -> list[tuple[str, str, str, float]]:
    with open(path, newline="") as fh:
        return [(r["metric"], r["method"], r["t"], float(r["value"])) for r in csv.DictReader(fh)]


def _svg(metric: str, rows) -> str:
    methods = list(dict.fromkeys(r[1] for r in rows))
    periods = list(dict.fromkeys(r[2] for r in rows))
    xi = {t: k for k, t in enumerate(periods)}
    vals = [r[3] for r in rows]
    lo, hi = min(vals), max(vals)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(t):
        return MARGIN["left"] + (pw * xi[t] / (len(periods) - 1) if len(periods) > 1 else pw / 2)

    def sy(v):
        return MARGIN["top"] + ph * (hi - v) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{escape(metric)}</text>',
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"] + ph}" x2="{MARGIN["left"] + pw}" '
        f'y2="{MARGIN["top"] + ph}" stroke="black"/>',
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"]}" x2="{MARGIN["left"]}" '
        f'y2="{MARGIN["top"] + ph}" stroke="black"/>',
    ]
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        y = sy(v)
        parts.append(f'<text x="{MARGIN["left"] - 6}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{v:.4g}</text>')
    step = max(1, len(periods) // 12)
    for t in periods[::step]:
        parts.append(f'<text x="{sx(t):.1f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{escape(t)}</text>')
    for n, method in enumerate(methods):
        colour = PALETTE[n % len(PALETTE)]
        pts = " ".join(f"{sx(t):.2f},{sy(v):.2f}" for _, m, t, v in rows if m == method)
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
                     f'points="{pts}"><title>{escape(method)}</title></polyline>')
        ly = MARGIN["top"] + 16 * n + 8
        lx = WIDTH - MARGIN["right"] + 12
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{colour}" '
                     f'stroke-width="2"/>')
        parts.append(f'<text x="{lx + 24}" y="{ly + 4}" font-family="sans-serif" '
                     f'font-size="11">{escape(method)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plots(reports, output_dir, metrics=METRIC_COLUMNS) -> list[Path]:
    """Write ``<metric>.csv`` and ``<metric>.svg`` for every metric with data.

    ``reports`` is a :class:`HorseraceReport`, a list of them, or rows read
    back from a report CSV. Metrics without any finite value are left out
    and listed in ``manifest.json``.
    """
    if isinstance(reports, list) and not reports:
        raise ValueError("no reports to plot")
    d = Path(output_dir)
    d.mkdir(parents=True, exist_ok=True)
    written, omitted = [], []
    for metric in metrics:
        rows = long_table(reports, metric)
        if not rows:
            omitted.append(metric)
            continue
        path = d / f"{metric}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "method", "t", "value"])
            for metric_, method, t, v in rows:
                w.writerow([metric_, method, t, repr(v)])
        svg = d / f"{metric}.svg"
        svg.write_text(_svg(metric, rows))
        written += [path, svg]
    manifest = {
        "schema_version": 1,
        "kind": "plots",
        "files": [p.name for p in written],
        "omitted": {m: "no finite values" for m in omitted},
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return written
