"""Static SVG line chart of closed-loop state trajectories."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .loop import ClosedLoopTrace

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=60, right=110, top=30, bottom=45)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def svg_chart(k: np.ndarray, series: np.ndarray, labels: Sequence[str], title: str = "State trajectories") -> str:
    """Polyline chart of the columns of ``series`` against ``k``."""
    k = np.asarray(k, dtype=float)
    series = np.asarray(series, dtype=float)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    kmin, kmax = float(k.min()), float(k.max())
    if kmax == kmin:
        kmax = kmin + 1
    finite = series[np.isfinite(series)]
    ymin, ymax = (float(finite.min()), float(finite.max())) if finite.size else (-1.0, 1.0)
    if ymax == ymin:
        ymin, ymax = ymin - 1, ymax + 1
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    def sx(v):
        return MARGIN["left"] + (v - kmin) / (kmax - kmin) * pw

    def sy(v):
        return MARGIN["top"] + (ymax - v) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(ymin, ymax):
        y = sy(t)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    for t in _ticks(kmin, kmax):
        x = sx(t)
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 16}" text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle">k</text>')
    if ymin < 0 < ymax:
        out.append(f'<line x1="{MARGIN["left"]}" y1="{sy(0):.2f}" x2="{MARGIN["left"] + pw}" y2="{sy(0):.2f}" stroke="#999"/>')

    for j, label in enumerate(labels):
        color = COLORS[j % len(COLORS)]
        col = series[:, j]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(k, col) if np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 18 * j
        lx = MARGIN["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trace_svg(t: ClosedLoopTrace) -> str:
    states = t.states
    n = states.shape[1] - 1
    labels = [f"x{i + 1}" for i in range(n)] + ["x_tilde"]
    return svg_chart(np.arange(states.shape[0]), states, labels)
