"""Minimal self-contained SVG 1.1 plots: line charts, fit plots and heat maps."""

from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=50)
MAX_CELLS_PER_AXIS = 160
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = _pad(xlim)
        self.y0, self.y1 = _pad(ylim)
        self.left = MARGIN["left"]
        self.right = WIDTH - MARGIN["right"]
        self.top = MARGIN["top"]
        self.bottom = HEIGHT - MARGIN["bottom"]

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)


def _pad(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi - lo < 1e-12:
        return lo - 0.5, hi + 0.5
    return lo, hi


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def _open(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]


def _axes(fr: _Frame, xlabel: str, ylabel: str, title: str) -> list[str]:
    out = [f'<rect x="{fr.left}" y="{fr.top}" width="{fr.right - fr.left}" '
           f'height="{fr.bottom - fr.top}" fill="none" stroke="black"/>']
    for t in _ticks(fr.x0, fr.x1):
        x = fr.px(t)
        out.append(f'<line x1="{x:.2f}" y1="{fr.bottom}" x2="{x:.2f}" y2="{fr.bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{fr.bottom + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(fr.y0, fr.y1):
        y = fr.py(t)
        out.append(f'<line x1="{fr.left - 5}" y1="{y:.2f}" x2="{fr.left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{fr.left - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{(fr.left + fr.right) / 2:.1f}" y="{HEIGHT - 12}" font-size="13" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(fr.top + fr.bottom) / 2:.1f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 16 {(fr.top + fr.bottom) / 2:.1f})">{escape(ylabel)}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="18" font-size="14" text-anchor="middle">{escape(title)}</text>')
    return out


def _polylines(fr: _Frame, x, y, color: str) -> list[str]:
    out, pts = [], []
    for xv, yv in zip(x, y):
        if math.isfinite(xv) and math.isfinite(yv):
            pts.append(f"{fr.px(xv):.2f},{fr.py(yv):.2f}")
        elif pts:
            out.append(pts)
            pts = []
    if pts:
        out.append(pts)
    return [f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(p)}"/>'
            for p in out]


def _finite_range(arrays):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays]) if arrays else np.array([])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    return float(vals.min()), float(vals.max())


def line_plot(x: Sequence[float], series: Mapping[str, Sequence[float]], xlabel: str,
              ylabel: str = "", title: str = "") -> str:
    fr = _Frame(_finite_range([x]), _finite_range(list(series.values())))
    out = _open(title) + _axes(fr, xlabel, ylabel, title)
    for k, (name, y) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        out += _polylines(fr, list(map(float, x)), list(map(float, y)), color)
        ly = fr.top + 14 + 16 * k
        out.append(f'<line x1="{fr.right - 120}" y1="{ly - 4}" x2="{fr.right - 100}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{fr.right - 95}" y="{ly}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def fit_plot(inv_n2: Sequence[float], values: Sequence[float], slope: float, intercept: float,
             ylabel: str = "", title: str = "") -> str:
    xs = list(map(float, inv_n2)) + [0.0]
    ys = list(map(float, values)) + [intercept]
    fr = _Frame(_finite_range([xs]), _finite_range([ys]))
    out = _open(title) + _axes(fr, "1/N^2", ylabel, title)
    for xv, yv in zip(inv_n2, values):
        out.append(f'<circle cx="{fr.px(xv):.2f}" cy="{fr.py(yv):.2f}" r="4" fill="{PALETTE[0]}"/>')
    x_end = max(xs)
    out.append(f'<line x1="{fr.px(0.0):.2f}" y1="{fr.py(intercept):.2f}" x2="{fr.px(x_end):.2f}" '
               f'y2="{fr.py(intercept + slope * x_end):.2f}" stroke="{PALETTE[1]}" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _diverging(v: float, vmax: float) -> str:
    if not math.isfinite(v) or vmax <= 0:
        return "#cccccc"
    t = max(-1.0, min(1.0, v / vmax))
    if t >= 0:
        r, g, b = 255, int(255 * (1 - t)), int(255 * (1 - t))
    else:
        r, g, b = int(255 * (1 + t)), int(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heat_map(x: Sequence[float], y: Sequence[float], field: np.ndarray,
             ridges: Sequence[Sequence[tuple[float, float]]], xlabel: str, ylabel: str,
             title: str = "") -> str:
    """Cells colored by ``field[i, j]`` at (x[i], y[j]); ridges drawn on top."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    field = np.asarray(field, dtype=float)
    dx = float(x[1] - x[0]) if x.size > 1 else 1.0
    dy = float(y[1] - y[0]) if y.size > 1 else 1.0
    fr = _Frame((x.min() - dx / 2, x.max() + dx / 2), (y.min() - dy / 2, y.max() + dy / 2))
    finite = field[np.isfinite(field)]
    # saturate at a high percentile so a single spike does not wash out the map
    vmax = float(np.percentile(np.abs(finite), 98)) if finite.size else 0.0
    out = _open(title)
    w = abs(fr.px(dx) - fr.px(0.0))
    h = abs(fr.py(0.0) - fr.py(dy))
    # large grids are subsampled to at most MAX_CELLS_PER_AXIS cells per axis
    sx = max(1, math.ceil(x.size / MAX_CELLS_PER_AXIS))
    sy = max(1, math.ceil(y.size / MAX_CELLS_PER_AXIS))
    for i in range(0, x.size, sx):
        for j in range(0, y.size, sy):
            out.append(f'<rect x="{fr.px(x[i] - dx / 2):.2f}" y="{fr.py(y[j] + dy * (sy - 0.5)):.2f}" '
                       f'width="{w * sx + 0.3:.2f}" height="{h * sy + 0.3:.2f}" '
                       f'fill="{_diverging(field[i, j], vmax)}"/>')
    out += _axes(fr, xlabel, ylabel, title)
    for line in ridges:
        if len(line) < 2:
            continue
        pts = " ".join(f"{fr.px(a):.2f},{fr.py(b):.2f}" for a, b in line)
        out.append(f'<polyline fill="none" stroke="black" stroke-width="1.2" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
