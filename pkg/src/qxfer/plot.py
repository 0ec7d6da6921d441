"""Minimal standalone SVG line and scatter plots."""
from __future__ import annotations

from os import PathLike
from pathlib import Path
from typing import Union
from xml.sax.saxutils import escape

import numpy as np

from .exper import SweepResult, TimeSeries

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=55)

STYLES = {
    "decay": {
        "columns": [("P_numeric", "numeric", "#d62728"), ("P_perturbative", "perturbative", "#ff7f0e")],
        "ylabel": "P",
        "ylim": (0.0, 1.05),
    },
    "mi": {
        "columns": [("I_numeric", "numeric", "#1f77b4"), ("I_model", "qubit model", "#2ca02c")],
        "ylabel": "I(B, Ā)",
        "ylim": (0.0, 1.5),
    },
}


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(x) for x in np.arange(start, hi + 1e-9 * step, step)]


def _num(x: float) -> str:
    return f"{x + 0.0:.6g}"


class _Canvas:
    def __init__(self, xlim, ylim, xlabel, ylabel, title="", legend_at="top"):
        self.xlim, self.ylim = xlim, ylim
        self.legend_at = legend_at
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        x0, y0, x1, y1 = self.box
        self.parts.append(
            f'<defs><clipPath id="plot"><rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}"/></clipPath></defs>'
        )
        self.parts.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>')
        for tx in _ticks(*xlim):
            px = self.px(tx)
            self.parts.append(f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="black"/>')
            self.parts.append(f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle">{_num(tx)}</text>')
        for ty in _ticks(*ylim):
            py = self.py(ty)
            self.parts.append(f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>')
            self.parts.append(f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end">{_num(ty)}</text>')
        self.parts.append(
            f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
        )
        self.parts.append(
            f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>'
        )
        if title:
            self.parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')
        self.legend = 0

    @property
    def box(self):
        return (MARGIN["left"], HEIGHT - MARGIN["bottom"], WIDTH - MARGIN["right"], MARGIN["top"])

    def px(self, x):
        x0, _, x1, _ = self.box
        lo, hi = self.xlim
        return x0 + (x - lo) / (hi - lo) * (x1 - x0)

    def py(self, y):
        _, y0, _, y1 = self.box
        lo, hi = self.ylim
        return y0 - (y - lo) / (hi - lo) * (y0 - y1)

    def _legend(self, label, color, marker=False):
        _, y0, x1, y1 = self.box
        y = y1 + 16 + 16 * self.legend if self.legend_at == "top" else y0 - 30 + 16 * self.legend
        self.legend += 1
        if marker:
            self.parts.append(f'<circle cx="{x1 - 130}" cy="{y - 4}" r="3" fill="{color}"/>')
        else:
            self.parts.append(f'<line x1="{x1 - 140}" y1="{y - 4}" x2="{x1 - 120}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
        self.parts.append(f'<text x="{x1 - 114}" y="{y}">{escape(label)}</text>')

    def polyline(self, x, y, color, label):
        pts = " ".join(f"{self.px(a):.2f},{self.py(b):.2f}" for a, b in zip(x, y) if np.isfinite(b))
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5" clip-path="url(#plot)"/>'
        )
        self._legend(label, color)

    def scatter(self, x, y, color, label):
        for a, b in zip(x, y):
            self.parts.append(f'<circle cx="{self.px(a):.2f}" cy="{self.py(b):.2f}" r="3.5" fill="{color}"/>')
        self._legend(label, color, marker=True)

    def svg(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        return lo - 1, hi + 1
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def render_series(series: TimeSeries, style: str = "decay", title: str = "") -> str:
    spec = STYLES[style]
    cols = [c for c in spec["columns"] if c[0] in series.columns]
    if series.t.size == 0 or not cols:
        raise ValueError("nothing to plot: series is empty")
    canvas = _Canvas((float(series.t[0]), float(series.t[-1]) or 1.0), spec["ylim"], "t", spec["ylabel"], title)
    for name, label, color in cols:
        canvas.polyline(series.t, series[name], color, label)
    return canvas.svg()


def render_sweep(result: SweepResult, title: str = "") -> str:
    rows = result.valid_rows
    if not rows:
        raise ValueError("nothing to plot: sweep has no valid rows")
    x = np.array([r.inv_c_squared for r in rows])
    y = np.array([r.t_target for r in rows])
    xlim = _padded(0.0, float(x.max()))
    ylim = _padded(0.0, float(y.max()))
    label = f"T_{result.target:g}" if result.target == result.target else "T"
    canvas = _Canvas(xlim, ylim, "1/c²", label, title, legend_at="bottom")
    canvas.scatter(x, y, "#d62728", "numeric")
    if result.fit is not None:
        xs = np.array(xlim)
        canvas.polyline(xs, result.fit.slope * xs + result.fit.intercept, "#1f77b4", "least-squares fit")
    return canvas.svg()


def emit_plot(
    data: Union[TimeSeries, SweepResult], path: Union[str, PathLike], style: str | None = None, title: str = ""
) -> Path:
    """Write ``data`` as a self-contained SVG file.

    ``style`` is ``"decay"`` or ``"mi"`` for time series; sweeps always
    render as a scatter of T against 1/c^2 with the fitted line.
    """
    if isinstance(data, SweepResult):
        text = render_sweep(data, title)
    else:
        text = render_series(data, style or "decay", title)
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path
