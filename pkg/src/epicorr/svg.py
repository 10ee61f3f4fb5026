"""Minimal static SVG charts: line plots, heatmaps, histograms, label strips.

Output is plain text with fixed numeric formatting so identical inputs give
identical bytes.
"""
from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
FONT = 'font-family="sans-serif"'


def _f(v: float) -> str:
    return f"{v:.2f}"


class SvgCanvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def rect(self, x, y, w, h, fill, stroke=None, extra=""):
        s = f' stroke="{stroke}"' if stroke else ""
        self.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{fill}"{s}{extra}/>')

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}" stroke-width="{width}"{d}/>'
        )

    def polyline(self, xs, ys, stroke, width=1.0, dash=None):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"{d}/>')

    def text(self, x, y, s, size=11, anchor="start", rotate=None, color="#000"):
        r = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" text-anchor="{anchor}" fill="{color}" {FONT}{r}>{escape(str(s))}</text>'
        )

    def to_string(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">'
        )
        body = "\n".join(self.parts)
        return f'<?xml version="1.0" encoding="UTF-8"?>\n{head}\n<rect width="100%" height="100%" fill="#fff"/>\n{body}\n</svg>\n'


class _Axes:
    """Linear data-to-pixel mapping inside a plot rectangle."""

    def __init__(self, canvas, x0, y0, w, h, xlim, ylim):
        self.c, self.x0, self.y0, self.w, self.h = canvas, x0, y0, w, h
        lo, hi = xlim
        self.xlim = (lo, hi if hi > lo else lo + 1.0)
        lo, hi = ylim
        self.ylim = (lo, hi if hi > lo else lo + 1.0)

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (np.asarray(x, dtype=float) - lo) / (hi - lo) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (np.asarray(y, dtype=float) - lo) / (hi - lo) * self.h

    def frame(self, title="", xlabel="", ylabel="", ticks=5):
        c = self.c
        c.rect(self.x0, self.y0, self.w, self.h, "none", stroke="#444")
        for i in range(ticks + 1):
            fx = self.xlim[0] + (self.xlim[1] - self.xlim[0]) * i / ticks
            fy = self.ylim[0] + (self.ylim[1] - self.ylim[0]) * i / ticks
            x = float(self.px(fx))
            y = float(self.py(fy))
            c.line(x, self.y0 + self.h, x, self.y0 + self.h + 4, "#444")
            c.text(x, self.y0 + self.h + 16, _tick(fx), size=9, anchor="middle")
            c.line(self.x0 - 4, y, self.x0, y, "#444")
            c.text(self.x0 - 6, y + 3, _tick(fy), size=9, anchor="end")
        if title:
            c.text(self.x0 + self.w / 2, self.y0 - 8, title, size=12, anchor="middle")
        if xlabel:
            c.text(self.x0 + self.w / 2, self.y0 + self.h + 32, xlabel, size=10, anchor="middle")
        if ylabel:
            c.text(self.x0 - 44, self.y0 + self.h / 2, ylabel, size=10, anchor="middle", rotate=-90)


def _tick(v: float) -> str:
    a = abs(v)
    if a != 0 and (a >= 1e4 or a < 1e-2):
        return f"{v:.1e}"
    return f"{v:.3g}"


def _limits(arrays, pad=0.05):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo if hi > lo else 1.0
    return lo - pad * span, hi + pad * span


def _legend(c, x, y, names, colors):
    for i, (name, col) in enumerate(zip(names, colors)):
        c.line(x, y + 14 * i, x + 18, y + 14 * i, col, 2)
        c.text(x + 22, y + 14 * i + 4, name, size=10)


def line_chart(series: Sequence[tuple], title="", xlabel="", ylabel="", width=720, height=320) -> str:
    """``series`` items are ``(x, y, label)`` or ``(x, y, label, color)``."""
    c = SvgCanvas(width, height)
    ax = _Axes(c, 64, 30, width - 200, height - 80, _limits([s[0] for s in series], 0), _limits([s[1] for s in series]))
    ax.frame(title, xlabel, ylabel)
    colors = []
    for i, s in enumerate(series):
        col = s[3] if len(s) > 3 else PALETTE[i % len(PALETTE)]
        colors.append(col)
        c.polyline(ax.px(s[0]), ax.py(s[1]), col, 1.0)
    _legend(c, width - 126, 40, [s[2] for s in series], colors)
    return c.to_string()


def _diverging(v: float) -> str:
    # blue (-1) -> white (0) -> red (+1)
    v = float(np.clip(v, -1.0, 1.0))
    if v >= 0:
        r, g, b = 255, int(round(255 * (1 - v))), int(round(255 * (1 - v)))
    else:
        r, g, b = int(round(255 * (1 + v))), int(round(255 * (1 + v))), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(matrix, title="", labels: Sequence[str] | None = None, cell=12) -> str:
    """Correlation-style heatmap on a fixed [-1, 1] diverging scale."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    margin_l, margin_t = (90 if labels else 20), 40
    side = n * cell
    width, height = margin_l + side + 80, margin_t + side + 30
    c = SvgCanvas(width, height)
    c.text(margin_l + side / 2, 24, title, size=12, anchor="middle")
    for i in range(n):
        for j in range(n):
            c.rect(margin_l + j * cell, margin_t + i * cell, cell, cell, _diverging(a[i, j]))
    if labels:
        for i, name in enumerate(labels):
            c.text(margin_l - 4, margin_t + i * cell + cell * 0.75, name, size=8, anchor="end")
    bx = margin_l + side + 20
    steps = 20
    for s in range(steps):
        v = 1 - 2 * s / (steps - 1)
        c.rect(bx, margin_t + s * side / steps, 14, side / steps + 0.5, _diverging(v))
    c.text(bx + 18, margin_t + 8, "1", size=9)
    c.text(bx + 18, margin_t + side / 2 + 3, "0", size=9)
    c.text(bx + 18, margin_t + side, "-1", size=9)
    return c.to_string()


def histogram_overlay(hists: Sequence[tuple], curves: Sequence[tuple] = (), title="", xlabel="eigenvalue", ylabel="density", width=640, height=340) -> str:
    """Step-outline histograms ``(edges, densities, label)`` plus optional ``(x, y, label)`` curves."""
    c = SvgCanvas(width, height)
    xs = [h[0] for h in hists] + [cv[0] for cv in curves]
    ys = [h[1] for h in hists] + [cv[1] for cv in curves] + [np.zeros(1)]
    lo, hi = _limits(ys)
    ax = _Axes(c, 64, 30, width - 220, height - 80, _limits(xs, 0), (0.0, hi))
    ax.frame(title, xlabel, ylabel)
    names, colors = [], []
    for i, (edges, dens, label) in enumerate(hists):
        col = PALETTE[i % len(PALETTE)]
        sx = np.repeat(edges, 2)[1:-1]
        sy = np.repeat(dens, 2)
        c.polyline(ax.px(np.r_[edges[0], sx, edges[-1]]), ax.py(np.r_[0.0, sy, 0.0]), col, 1.5)
        names.append(label)
        colors.append(col)
    for j, (x, y, label) in enumerate(curves):
        col = PALETTE[(len(hists) + j) % len(PALETTE)]
        c.polyline(ax.px(x), ax.py(y), col, 1.5, dash="5,3")
        names.append(label)
        colors.append(col)
    _legend(c, width - 146, 40, names, colors)
    return c.to_string()


def label_strip(starts, labels, k: int, stride: int, title="", overlay=None, overlay_label="incidence", width=900, height=260) -> str:
    """Cluster label per epoch as coloured bars on a day axis, with an optional daily line overlay."""
    starts = np.asarray(starts)
    labels = np.asarray(labels)
    c = SvgCanvas(width, height)
    x_hi = float(starts[-1] + stride) if starts.size else 1.0
    if overlay is not None:
        x_hi = max(x_hi, float(len(overlay)))
    ax = _Axes(c, 70, 30, width - 190, height - 80, (0.0, x_hi), (0.5, k + 0.5))
    c.rect(ax.x0, ax.y0, ax.w, ax.h, "none", stroke="#444")
    c.text(ax.x0 + ax.w / 2, ax.y0 - 8, title, size=12, anchor="middle")
    for j in range(k):
        y = float(ax.py(j + 1))
        c.text(ax.x0 - 6, y + 3, f"Cluster {j + 1}", size=9, anchor="end")
        c.line(ax.x0, y, ax.x0 + ax.w, y, "#ddd", 0.5)
    for s, lab in zip(starts, labels):
        x0, x1 = float(ax.px(s)), float(ax.px(s + stride))
        y = float(ax.py(lab + 1))
        c.rect(x0, y - 6, max(x1 - x0 - 0.5, 0.5), 12, PALETTE[int(lab) % len(PALETTE)])
    if overlay is not None:
        ov = np.asarray(overlay, dtype=float)
        top = float(ov.max()) if ov.size and ov.max() > 0 else 1.0
        ys = ax.y0 + ax.h - ov / top * ax.h
        c.polyline(ax.px(np.arange(ov.size)), ys, "#555", 0.8)
        _legend(c, width - 110, 40, [overlay_label], ["#555"])
    for i in range(6):
        d = x_hi * i / 5
        c.text(float(ax.px(d)), ax.y0 + ax.h + 16, f"{d:.0f}", size=9, anchor="middle")
    c.text(ax.x0 + ax.w / 2, ax.y0 + ax.h + 34, "day", size=10, anchor="middle")
    return c.to_string()
