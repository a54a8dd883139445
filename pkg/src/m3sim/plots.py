"""Static SVG charts for model comparison.

Pure string assembly: the output is a deterministic function of the
input series, so identical runs produce byte-identical files. Member
series draw in gray, the meta-model in green, and the reference series
(when given) dashed orange.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .multimodel import MultiModel, totals

__all__ = ["plot_timeseries", "plot_totals"]

MEMBER_COLOR = "#9aa0a6"
META_COLOR = "#2e7d32"
REFERENCE_COLOR = "#e65100"

_W, _H = 960, 480
_ML, _MR, _MT, _MB = 72, 24, 44, 56


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, count)
    return [float(v) for v in raw]


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


class _Canvas:
    """Accumulates SVG fragments for a fixed plot area."""

    def __init__(self, width, height, title):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
            f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        ]
        if title:
            self.text(width / 2, 24, title, size=15, anchor="middle", weight="bold")

    def text(self, x, y, s, size=11, anchor="start", fill="#202124", weight="normal"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" text-anchor="{anchor}" '
            f'font-weight="{weight}" fill="{fill}">{s}</text>'
        )

    def line(self, x1, y1, x2, y2, stroke="#dadce0", width=1):
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{width}"/>'
        )

    def polyline(self, xs, ys, stroke, width=1.0, dash=None):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width}"{dash_attr}/>'
        )

    def rect(self, x, y, w, h, fill, cls=None):
        cls_attr = f' class="{cls}"' if cls else ""
        self.parts.append(
            f'<rect{cls_attr} x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}"/>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def plot_timeseries(multi: MultiModel, meta=None, reference=None, title=None) -> str:
    """Line chart of every member, the meta series, and an optional reference."""
    series = [s for _, s in multi.members]
    if meta is not None:
        series.append(meta.series)
    if reference is not None:
        series.append(reference)

    t0 = min(s.start_time for s in series)
    t_hi = max(s.timestamps()[-1] for s in series)
    lo = min(float(np.min(s.values)) for s in series)
    hi = max(float(np.max(s.values)) for s in series)
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    span_t = max(1, t_hi - t0)
    span_v = hi - lo

    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB

    def sx(t):
        return _ML + (t - t0) / span_t * plot_w

    def sy(v):
        return _MT + (hi - v) / span_v * plot_h

    c = _Canvas(_W, _H, title)
    for v in _ticks(lo, hi):
        y = sy(v)
        c.line(_ML, y, _W - _MR, y)
        c.text(_ML - 6, y + 4, _tick_label(v), anchor="end")
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        t = t0 + frac * span_t
        x = sx(t)
        c.line(x, _MT, x, _H - _MB)
        c.text(x, _H - _MB + 16, _tick_label((t - t0) / 3600.0), anchor="middle")
    c.text(_W / 2, _H - 12, "hours since start", anchor="middle")
    c.text(14, _MT - 10, multi.unit.value)

    for _, s in multi.members:
        ts = s.timestamps()
        c.polyline(sx(ts.astype(np.float64)), sy(s.values), MEMBER_COLOR, width=1.0)
    if meta is not None:
        ts = meta.series.timestamps()
        c.polyline(sx(ts.astype(np.float64)), sy(meta.series.values), META_COLOR, width=2.0)
    if reference is not None:
        ts = reference.timestamps()
        c.polyline(sx(ts.astype(np.float64)), sy(reference.values), REFERENCE_COLOR,
                   width=2.0, dash="6,4")

    lx = _ML + 8
    c.text(lx, _MT + 14, f"models ({len(multi)})", fill=MEMBER_COLOR)
    if meta is not None:
        c.text(lx + 110, _MT + 14, "meta", fill=META_COLOR)
    if reference is not None:
        c.text(lx + 160, _MT + 14, "reference", fill=REFERENCE_COLOR)
    return c.render()


def plot_totals(multi: MultiModel, meta=None, title=None) -> str:
    """Horizontal bars of each member's final value; the meta bar is labeled M."""
    rows = totals(multi)
    if meta is not None:
        if meta.series.values.size == 0:
            raise ValidationError("meta series is empty")
        rows = rows + [("M", float(meta.series.values[-1]))]

    bar_h, gap = 22, 8
    height = _MT + len(rows) * (bar_h + gap) + _MB - gap
    plot_w = _W - _ML - _MR
    top = max(v for _, v in rows)
    if top <= 0:
        top = 1.0

    c = _Canvas(_W, max(height, 160), title)
    c.text(14, _MT - 10, f"total ({multi.unit.value})")
    for i, (label, value) in enumerate(rows):
        y = _MT + i * (bar_h + gap)
        w = max(0.0, value / top) * plot_w
        color = META_COLOR if (meta is not None and i == len(rows) - 1) else MEMBER_COLOR
        c.rect(_ML, y, w, bar_h, color, cls="bar")
        c.text(_ML - 6, y + bar_h - 6, str(label), anchor="end")
        c.text(_ML + w + 6, y + bar_h - 6, f"{value:.1f}")
    return c.render()
