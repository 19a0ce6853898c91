"""Render an aggregate results CSV as an SVG line chart of NMSE in dB."""

from __future__ import annotations

import csv
import math
from collections import Counter
from xml.sax.saxutils import escape

from .errors import CsvParseError, EmptyInputError
from .harness import AGGREGATE_HEADER

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 60
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def read_aggregate_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError("CSV file is empty") from None
        missing = [c for c in ("method", "alpha", "r_x", "nmse") if c not in header]
        if missing:
            raise CsvParseError(1, f"missing columns: {', '.join(missing)}")
        col = {name: header.index(name) for name in header}
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(lineno, f"expected {len(header)} fields, got {len(row)}")
            try:
                nmse = float(row[col["nmse"]])
                alpha = float(row[col["alpha"]])
                r_x = float(row[col["r_x"]])
            except ValueError as exc:
                raise CsvParseError(lineno, str(exc)) from None
            if nmse < 0 or math.isnan(nmse):
                raise CsvParseError(lineno, f"invalid nmse {row[col['nmse']]!r}")
            rows.append({"method": row[col["method"]], "alpha": alpha, "r_x": r_x, "nmse": nmse})
    if not rows:
        raise EmptyInputError("CSV has no data rows")
    return rows


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks, v = [], start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def render_svg(rows: list[dict], axis: str | None = None) -> str:
    """One polyline per method; x is alpha or r_x, y is ``10 log10 NMSE``."""
    if not rows:
        raise EmptyInputError("nothing to plot")
    if axis is None:
        axis = "alpha" if len({r["alpha"] for r in rows}) > 1 or len({r["r_x"] for r in rows}) == 1 else "r_x"
    other = "r_x" if axis == "alpha" else "alpha"
    # keep the slice of a mixed sweep where the other coordinate takes its commonest value
    held = Counter(r[other] for r in rows).most_common(1)[0][0]
    rows = [r for r in rows if r[other] == held]

    methods = list(dict.fromkeys(r["method"] for r in rows))
    finite = [10 * math.log10(r["nmse"]) for r in rows if r["nmse"] > 0]
    y_lo = min(finite, default=-1.0)
    y_hi = max(finite, default=0.0)
    if y_hi - y_lo < 1.0:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    xs = [r[axis] for r in rows]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x_lo) / (x_hi - x_lo) * pw

    def py(db):
        db = min(max(db, y_lo), y_hi)
        return TOP + (y_hi - db) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for t in _nice_ticks(x_lo, x_hi):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    xlabel = "measurement rate alpha = N/M" if axis == "alpha" else "quantization rate r_x (bits/component)"
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2})">NMSE (dB)</text>')

    for i, meth in enumerate(methods):
        color = COLORS[i % len(COLORS)]
        pts = sorted((r[axis], 10 * math.log10(r["nmse"]) if r["nmse"] > 0 else -math.inf)
                     for r in rows if r["method"] == meth)
        coords = " ".join(f"{px(x):.2f},{py(db):.2f}" for x, db in pts)
        out.append(f'<polyline data-method="{escape(meth)}" fill="none" stroke="{color}" '
                   f'stroke-width="2" points="{coords}"/>')
        for x, db in pts:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(db):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 20 + 20 * i
        out.append(f'<line x1="{LEFT + pw + 15}" y1="{ly}" x2="{LEFT + pw + 40}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 45}" y="{ly + 4}">{escape(meth)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path, out_path, axis: str | None = None) -> None:
    svg = render_svg(read_aggregate_csv(csv_path), axis)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(svg)


__all__ = ["emit_plot", "read_aggregate_csv", "render_svg", "AGGREGATE_HEADER"]
