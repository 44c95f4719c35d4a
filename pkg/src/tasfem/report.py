"""SVG diagrams and fixed-width tables for TAS series.

Output is deterministic: identical input gives byte-identical text.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

DIAGRAM_KINDS = ("mesh_convergence", "static_scaling", "doe", "true_static_scaling")

# kind -> (x label, y label, x log, y log)
_AXES = {
    "mesh_convergence": ("DoS (log10 N)", "DoA (-log10 err)", False, False),
    "static_scaling": ("Time (s)", "DoF / s", True, True),
    "doe": ("Time (s)", "DoE (-log10 err x T)", True, False),
    "true_static_scaling": ("Time (s)", "(DoA/DoS) x DoF / s", True, True),
}
_TITLES = {
    "mesh_convergence": "Mesh convergence",
    "static_scaling": "Static scaling",
    "doe": "Digits of efficacy",
    "true_static_scaling": "True static scaling",
}
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")
_MARKERS = ("circle", "square", "diamond", "triangle")

WIDTH, HEIGHT = 720, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 200, 40, 70


@dataclass
class DiagramSpec:
    kind: str
    series: Sequence
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    x_log: bool | None = None
    y_log: bool | None = None
    guides: Sequence[float] = ()
    annotations: Sequence[str] = ()

    def __post_init__(self):
        if self.kind not in DIAGRAM_KINDS:
            raise ValueError(f"unknown diagram kind {self.kind!r}; choose from {DIAGRAM_KINDS}")
        xl, yl, xlog, ylog = _AXES[self.kind]
        self.title = self.title if self.title is not None else _TITLES[self.kind]
        self.xlabel = self.xlabel if self.xlabel is not None else xl
        self.ylabel = self.ylabel if self.ylabel is not None else yl
        self.x_log = xlog if self.x_log is None else self.x_log
        self.y_log = ylog if self.y_log is None else self.y_log


def series_points(series, kind):
    """(x, y) arrays plotted for a series, and how many records were omitted."""
    if kind == "static_scaling":
        return series.times, series.rate, 0
    ok = series.included
    omitted = int((~ok).sum())
    if kind == "mesh_convergence":
        return series.dos[ok], series.doa[ok], omitted
    if kind == "doe":
        return series.times[ok], series.doe[ok], omitted
    return series.times[ok], series.true_rate[ok], omitted


def _num(v):
    """Compact deterministic coordinate text."""
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _tick_label(v, log):
    if log:
        e = math.log10(v)
        if abs(e - round(e)) < 1e-9:
            return f"1e{int(round(e))}"
        return f"{v:.3g}"
    return f"{v:.10g}"


def nice_step(span, target=6):
    """Step from the 1-2-5 ladder giving about ``target`` intervals."""
    if span <= 0 or not math.isfinite(span):
        return 1.0
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 5.0, 10.0):
        if m * mag >= raw * (1 - 1e-12):
            return m * mag
    return 10.0 * mag


def linear_ticks(lo, hi, target=6):
    step = nice_step(hi - lo, target)
    start = math.ceil(lo / step - 1e-9)
    stop = math.floor(hi / step + 1e-9)
    return [round(k * step, 12) for k in range(start, stop + 1)]


def log_ticks(lo, hi, target=6):
    """Ticks for a log axis given log10 bounds; returns values (not logs)."""
    dlo, dhi = math.ceil(lo - 1e-9), math.floor(hi + 1e-9)
    if dhi - dlo >= 2:
        every = max(1, int(nice_step(dhi - dlo, target)))
        return [10.0**e for e in range(dlo, dhi + 1) if e % every == 0]
    ticks = []
    for e in range(math.floor(lo) - 1, math.ceil(hi) + 1):
        for m in (1, 2, 5):
            v = m * 10.0**e
            if lo - 1e-9 <= math.log10(v) <= hi + 1e-9:
                ticks.append(v)
    return ticks


def _bounds(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo < 1e-12 * max(1.0, abs(lo)):
        pad = 1.0 if abs(lo) < 1e-9 else 0.5 * abs(lo)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Frame:
    def __init__(self, xs, ys, x_log, y_log):
        self.x_log, self.y_log = x_log, y_log
        tx = np.log10(xs) if x_log else xs
        ty = np.log10(ys) if y_log else ys
        self.xlim = _bounds(tx)
        self.ylim = _bounds(ty)
        self.w = WIDTH - LEFT - RIGHT
        self.h = HEIGHT - TOP - BOTTOM

    def px(self, x):
        t = math.log10(x) if self.x_log else x
        return LEFT + (t - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * self.w

    def py(self, y):
        t = math.log10(y) if self.y_log else y
        return TOP + self.h - (t - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * self.h


def _marker(shape, x, y, color):
    r = 3.5
    if shape == "circle":
        return f'<circle cx="{_num(x)}" cy="{_num(y)}" r="{r}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{_num(x - r)}" y="{_num(y - r)}" width="{2 * r}" height="{2 * r}" fill="{color}"/>'
    if shape == "diamond":
        pts = f"{_num(x)},{_num(y - r)} {_num(x + r)},{_num(y)} {_num(x)},{_num(y + r)} {_num(x - r)},{_num(y)}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    pts = f"{_num(x)},{_num(y - r)} {_num(x + r)},{_num(y + r)} {_num(x - r)},{_num(y + r)}"
    return f'<polygon points="{pts}" fill="{color}"/>'


def render_svg(spec: DiagramSpec) -> str:
    """Standalone SVG 1.1 document for one TAS diagram."""
    if not spec.series:
        raise ValueError("diagram needs at least one series")
    ordered = sorted(spec.series, key=lambda s: (s.label, str(s.key)))
    data = []
    omitted = 0
    for s in ordered:
        x, y, om = series_points(s, spec.kind)
        omitted += om
        data.append((s, np.asarray(x, float), np.asarray(y, float)))
    finite = [(x, y) for _, x, y in data if len(x)]
    if not finite:
        raise ValueError("no plottable points: every record is outside the digit domain")
    allx = np.concatenate([x for x, _ in finite])
    ally = np.concatenate([y for _, y in finite])
    frame = _Frame(allx, ally, spec.x_log, spec.y_log)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<title>{escape(spec.title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<g class="plot-area" data-kind="{spec.kind}" data-xlim="{frame.xlim[0]!r} {frame.xlim[1]!r}" '
        f'data-ylim="{frame.ylim[0]!r} {frame.ylim[1]!r}" data-xlog="{int(spec.x_log)}" data-ylog="{int(spec.y_log)}" '
        f'data-box="{LEFT} {TOP} {frame.w} {frame.h}">',
        f'<rect x="{LEFT}" y="{TOP}" width="{frame.w}" height="{frame.h}" fill="none" stroke="black"/>',
    ]
    # ticks and grid
    if spec.x_log:
        xt = log_ticks(*frame.xlim)
    else:
        xt = linear_ticks(*frame.xlim)
    if spec.y_log:
        yt = log_ticks(*frame.ylim)
    else:
        yt = linear_ticks(*frame.ylim)
    for v in xt:
        X = frame.px(v)
        out.append(f'<line x1="{_num(X)}" y1="{TOP}" x2="{_num(X)}" y2="{TOP + frame.h}" stroke="#dddddd"/>')
        out.append(
            f'<text x="{_num(X)}" y="{TOP + frame.h + 16}" text-anchor="middle">{escape(_tick_label(v, spec.x_log))}</text>'
        )
    for v in yt:
        Y = frame.py(v)
        out.append(f'<line x1="{LEFT}" y1="{_num(Y)}" x2="{LEFT + frame.w}" y2="{_num(Y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_num(Y + 4)}" text-anchor="end">{escape(_tick_label(v, spec.y_log))}</text>')
    out.append("</g>")

    for i, (s, x, y) in enumerate(data):
        color = _PALETTE[i % len(_PALETTE)]
        shape = _MARKERS[(i // len(_PALETTE)) % len(_MARKERS)]
        pts = " ".join(f"{_num(frame.px(a))},{_num(frame.py(b))}" for a, b in zip(x, y))
        out.append(f'<g class="series" data-label="{escape(s.label, {chr(34): "&quot;"})}">')
        if len(x):
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            out.extend(_marker(shape, frame.px(a), frame.py(b), color) for a, b in zip(x, y))
        out.append("</g>")

    for j, slope in enumerate(spec.guides):
        out.extend(_guide(frame, slope, j))

    # legend
    lx = WIDTH - RIGHT + 12
    out.append('<g class="legend">')
    for i, (s, _, _) in enumerate(data):
        color = _PALETTE[i % len(_PALETTE)]
        ly = TOP + 10 + 18 * i
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        text = s.label
        if spec.kind == "mesh_convergence" and s.convergence_slope is not None:
            text += f" (slope {s.convergence_slope:.2f})"
        out.append(f'<text x="{lx + 24}" y="{ly + 4}">{escape(text)}</text>')
    out.append("</g>")

    out.append(f'<text x="{LEFT + frame.w / 2:g}" y="22" text-anchor="middle" font-size="15">{escape(spec.title)}</text>')
    out.append(f'<text x="{LEFT + frame.w / 2:g}" y="{HEIGHT - 30}" text-anchor="middle">{escape(spec.xlabel)}</text>')
    cy = TOP + frame.h / 2
    out.append(
        f'<text x="18" y="{cy:g}" text-anchor="middle" transform="rotate(-90 18 {cy:g})">{escape(spec.ylabel)}</text>'
    )
    notes = list(spec.annotations)
    if omitted and spec.kind != "static_scaling":
        notes.append(f"{omitted} record(s) with err >= 1 or N <= 1 omitted")
    for k, note in enumerate(notes):
        out.append(f'<text class="note" x="{LEFT}" y="{HEIGHT - 12 - 14 * (len(notes) - 1 - k)}" font-size="10">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _guide(frame, slope, j):
    """Reference slope triangle in the lower right of the plot area."""
    x0t = frame.xlim[0] + 0.62 * (frame.xlim[1] - frame.xlim[0])
    y0t = frame.ylim[0] + (0.08 + 0.12 * j) * (frame.ylim[1] - frame.ylim[0])
    dx = 0.15 * (frame.xlim[1] - frame.xlim[0])
    dy = slope * dx
    def P(tx, ty):
        X = LEFT + (tx - frame.xlim[0]) / (frame.xlim[1] - frame.xlim[0]) * frame.w
        Y = TOP + frame.h - (ty - frame.ylim[0]) / (frame.ylim[1] - frame.ylim[0]) * frame.h
        return f"{_num(X)},{_num(Y)}"
    pts = f"{P(x0t, y0t)} {P(x0t + dx, y0t)} {P(x0t + dx, y0t + dy)}"
    label_xy = P(x0t + dx, y0t + dy / 2).split(",")
    return [
        f'<polygon class="guide" points="{pts}" fill="none" stroke="#555555" stroke-dasharray="4 3"/>',
        f'<text x="{label_xy[0]}" y="{label_xy[1]}" dx="4" font-size="10">{slope:g}</text>',
    ]


def _fmt(v, nd=2):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    return f"{v:.{nd}f}"


def _fmt_sci(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    return f"{v:.3e}"


def render_table(series, style="doa_dos") -> str:
    """Text table per series: DoF, DoS, DoA, DoA/DoS (and timings for ``full``)."""
    if not series:
        raise ValueError("table needs at least one series")
    if style not in ("doa_dos", "full"):
        raise ValueError("style must be 'doa_dos' or 'full'")
    cols = ["h", "DoF", "DoS", "DoA", "DoA/DoS"]
    if style == "full":
        cols += ["T (s)", "N/T", "DoE", "true N/T"]
    blocks = []
    footnote = False
    for s in sorted(series, key=lambda s: (s.label, str(s.key))):
        rows = []
        for i, r in enumerate(s.records):
            a, d = s.doa[i], s.dos[i]
            ratio = a / d if not (math.isnan(a) or math.isnan(d)) else float("nan")
            if math.isnan(a):
                footnote = True
            row = [f"1/{round(1 / r.h)}" if abs(1 / r.h - round(1 / r.h)) < 1e-9 else f"{r.h:.3g}",
                   str(r.n_dofs), _fmt(d), _fmt(a), _fmt(ratio)]
            if style == "full":
                row += [_fmt_sci(r.time_seconds), _fmt_sci(s.rate[i]), _fmt(s.doe[i]), _fmt_sci(s.true_rate[i])]
            rows.append(row)
        widths = [max(len(c), *(len(r[k]) for r in rows)) for k, c in enumerate(cols)]
        line = "  ".join(c.rjust(w) for c, w in zip(cols, widths))
        lines = [s.label, line, "-" * len(line)]
        lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
        if s.convergence_slope is not None:
            txt = f"DoA/DoS slope {s.convergence_slope:.3f}"
            if s.predicted_slope is not None:
                txt += f" (predicted {s.predicted_slope:.3f})"
            lines.append(txt)
        blocks.append("\n".join(lines))
    text = "\n\n".join(blocks) + "\n"
    if footnote:
        text += "\nn/a: record outside the digit domain (err >= 1 or N <= 1)\n"
    return text
