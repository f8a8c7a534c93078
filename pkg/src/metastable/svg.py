"""Minimal static SVG 1.1 plots: line charts and rect-based heat maps."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 480
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _header(width=W, height=H) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]


class _Frame:
    def __init__(self, xlim, ylim, log_y=False):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.log_y = log_y
        self.left = MARGIN["left"]
        self.right = W - MARGIN["right"]
        self.top = MARGIN["top"]
        self.bottom = H - MARGIN["bottom"]

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        if self.log_y:
            y = np.log10(y)
        return self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def axes(self, title, xlabel, ylabel) -> list[str]:
        out = [
            f'<rect x="{self.left}" y="{self.top}" width="{self.right - self.left}" '
            f'height="{self.bottom - self.top}" fill="none" stroke="black"/>',
            f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
            f'font-size="15">{escape(title)}</text>',
            f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13">{escape(xlabel)}</text>',
            f'<text x="18" y="{H / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13" transform="rotate(-90 18 {H / 2:.1f})">{escape(ylabel)}</text>',
        ]
        for t in np.linspace(self.x0, self.x1, 5):
            x = self.px(t)
            out.append(f'<line x1="{x:.2f}" y1="{self.bottom}" x2="{x:.2f}" y2="{self.bottom + 5}" stroke="black"/>')
            out.append(
                f'<text x="{x:.2f}" y="{self.bottom + 19}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{t:.4g}</text>'
            )
        for t in np.linspace(self.y0, self.y1, 5):
            label = 10**t if self.log_y else t
            y = self.bottom - (t - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)
            out.append(f'<line x1="{self.left - 5}" y1="{y:.2f}" x2="{self.left}" y2="{y:.2f}" stroke="black"/>')
            out.append(
                f'<text x="{self.left - 8}" y="{y + 4:.2f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{label:.3g}</text>'
            )
        return out


def _limits(values, pad=0.05):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _polyline(frame, x, y, color, width=1.8) -> str | None:
    pts = [
        f"{frame.px(a):.2f},{frame.py(b):.2f}"
        for a, b in zip(x, y)
        if np.isfinite(a) and np.isfinite(b) and (not frame.log_y or b > 0)
    ]
    if len(pts) < 2:
        return None
    return f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{" ".join(pts)}"/>'


def line_plot(path, x, ys, title="", xlabel="", ylabel="", labels=None, log_y=False, markers=False):
    """Write one or more curves ``ys`` against ``x``."""
    ys = [np.asarray(y, dtype=float) for y in (ys if isinstance(ys, (list, tuple)) else [ys])]
    x = np.asarray(x, dtype=float)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    allv = np.concatenate(ys)
    if log_y:
        allv = np.log10(allv[allv > 0]) if np.any(allv > 0) else np.array([0.0])
    frame = _Frame(_limits(x, 0.0), _limits(allv), log_y)
    out = _header() + frame.axes(title, xlabel, ylabel)
    for k, y in enumerate(ys):
        c = colors[k % len(colors)]
        line = _polyline(frame, x, y, c)
        if line:
            out.append(line)
        if markers:
            for a, b in zip(x, y):
                if np.isfinite(b) and (not log_y or b > 0):
                    out.append(f'<circle cx="{frame.px(a):.2f}" cy="{frame.py(b):.2f}" r="3" fill="{c}"/>')
        if labels:
            ly = frame.top + 16 + 16 * k
            out.append(f'<line x1="{frame.right - 130}" y1="{ly - 4}" x2="{frame.right - 110}" y2="{ly - 4}" stroke="{c}" stroke-width="2"/>')
            out.append(
                f'<text x="{frame.right - 105}" y="{ly}" font-family="sans-serif" font-size="11">{escape(str(labels[k]))}</text>'
            )
    out.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _shade(v: float) -> str:
    # white -> dark blue
    v = min(max(v, 0.0), 1.0)
    r = int(round(255 * (1 - v) + 8 * v))
    g = int(round(255 * (1 - v) + 48 * v))
    b = int(round(255 * (1 - v) + 107 * v))
    return f"#{r:02x}{g:02x}{b:02x}"


def heat_map(path, M, extent, title="", xlabel="", ylabel="", overlay=None, max_cells=220):
    """Heat map of ``M[i, j]`` with row ``i`` on x and column ``j`` on y.

    ``extent = (lo, hi)`` applies to both axes. ``overlay = (x, y)`` draws a
    curve on top (e.g. the deterministic return map). Large matrices are
    block-averaged down to ``max_cells``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n > max_cells:
        f = int(np.ceil(n / max_cells))
        pad = f * int(np.ceil(n / f)) - n
        Mp = np.pad(M, ((0, pad), (0, pad)))
        k = Mp.shape[0] // f
        M = Mp.reshape(k, f, k, f).mean(axis=(1, 3))
        n = k
    lo, hi = extent
    frame = _Frame((lo, hi), (lo, hi))
    out = _header() + frame.axes(title, xlabel, ylabel)
    vmax = M.max() if M.size and M.max() > 0 else 1.0
    cw = (frame.right - frame.left) / n
    ch = (frame.bottom - frame.top) / n
    for i in range(n):
        for j in range(n):
            v = M[i, j] / vmax
            if v <= 1e-4:
                continue
            x = frame.left + i * cw
            y = frame.bottom - (j + 1) * ch
            out.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" fill="{_shade(v)}"/>'
            )
    if overlay is not None:
        ox, oy = overlay
        line = _polyline(frame, ox, oy, "black", 1.5)
        if line:
            out.append(line)
        diag = _polyline(frame, [lo, hi], [lo, hi], "#888888", 1.0)
        out.append(diag.replace('fill="none"', 'fill="none" stroke-dasharray="4,3"'))
    out.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
