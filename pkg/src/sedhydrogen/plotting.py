"""Minimal SVG overlays: histogram bars with a reference density curve.

Deliberately dependency-free; the CSV tables written next to the plots are the
canonical output.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n + 1)


def histogram_svg(edges, density, curve_x, curve_y, *, title: str, xlabel: str, ylabel: str = "density") -> str:
    edges = np.asarray(edges, dtype=float)
    density = np.asarray(density, dtype=float)
    curve_x = np.asarray(curve_x, dtype=float)
    curve_y = np.asarray(curve_y, dtype=float)
    x0, x1 = edges[0], edges[-1]
    ymax = max(float(np.max(density, initial=0.0)), float(np.max(curve_y, initial=0.0)))
    ymax = 1.05 * ymax if ymax > 0 else 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN["top"] + ph - y / ymax * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for a, b, d in zip(edges[:-1], edges[1:], density):
        if d <= 0:
            continue
        out.append(
            f'<rect x="{sx(a):.2f}" y="{sy(d):.2f}" width="{sx(b) - sx(a):.2f}" '
            f'height="{sy(0) - sy(d):.2f}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.4"/>'
        )
    keep = (curve_x >= x0) & (curve_x <= x1) & np.isfinite(curve_y)
    pts = " ".join(f"{sx(x):.2f},{sy(min(y, ymax)):.2f}" for x, y in zip(curve_x[keep], curve_y[keep]))
    out.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" stroke-width="1.8"/>')
    # axes
    bottom, left = sy(0), MARGIN["left"]
    out.append(f'<line x1="{left}" y1="{bottom:.2f}" x2="{left + pw}" y2="{bottom:.2f}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{MARGIN["top"]}" x2="{left}" y2="{bottom:.2f}" stroke="black"/>')
    for x in _ticks(x0, x1):
        out.append(f'<line x1="{sx(x):.2f}" y1="{bottom:.2f}" x2="{sx(x):.2f}" y2="{bottom + 5:.2f}" stroke="black"/>')
        out.append(f'<text x="{sx(x):.2f}" y="{bottom + 18:.2f}" text-anchor="middle">{x:g}</text>')
    for y in _ticks(0.0, ymax, 4):
        out.append(f'<line x1="{left - 5}" y1="{sy(y):.2f}" x2="{left}" y2="{sy(y):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(y) + 4:.2f}" text-anchor="end">{y:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    # legend
    lx, ly = left + pw - 150, MARGIN["top"] + 10
    out.append(f'<rect x="{lx}" y="{ly}" width="14" height="10" fill="#9ecae1" stroke="#3182bd"/>')
    out.append(f'<text x="{lx + 20}" y="{ly + 9}">simulation</text>')
    out.append(f'<line x1="{lx}" y1="{ly + 24}" x2="{lx + 14}" y2="{ly + 24}" stroke="#d62728" stroke-width="1.8"/>')
    out.append(f'<text x="{lx + 20}" y="{ly + 28}">reference</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_histogram_svg(path, *args, **kwargs) -> None:
    Path(path).write_text(histogram_svg(*args, **kwargs))
