"""Deterministic SVG heatmaps of speed grids.

Differential grids use a diverging palette (blue below zero, white at zero,
red above) on a symmetric scale; plain speed grids use white to red.  All
numbers are written with fixed precision so identical grids give identical
bytes.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .polygrid import SpeedGrid

BLUE = (33, 102, 172)
WHITE = (247, 247, 247)
RED = (178, 24, 43)
MASKED = "#d9d9d9"


def _mix(a: Tuple[int, int, int], b: Tuple[int, int, int], t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    r, g, bl = (int(round(x + (y - x) * t)) for x, y in zip(a, b))
    return f"#{r:02x}{g:02x}{bl:02x}"


def color(value: float, limit: float, diverging: bool = True) -> str:
    if not math.isfinite(value):
        return MASKED
    if limit <= 0:
        return _mix(WHITE, WHITE, 0.0)
    if diverging:
        if value < 0:
            return _mix(WHITE, BLUE, -value / limit)
        return _mix(WHITE, RED, value / limit)
    return _mix(WHITE, RED, value / limit)


def render_svg(g: SpeedGrid, title: Optional[str] = None, diverging: bool = True,
               limit: Optional[float] = None, cell_px: int = 12) -> str:
    """SVG with one rect per in-rink cell.  Column 0 (the team's DZ end) is on
    the left and row 0 (y = -width/2) at the bottom."""
    vals = g.values
    n_rows, n_cols = vals.shape
    finite = vals[g.valid & np.isfinite(vals)]
    if limit is None:
        limit = float(np.abs(finite).max()) if diverging and len(finite) else (float(finite.max()) if len(finite) else 0.0)
    w, h = n_cols * cell_px, n_rows * cell_px
    top = 24
    legend = 28
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h + top + legend}" '
        f'viewBox="0 0 {w} {h + top + legend}">',
        f'<text x="4" y="16" font-family="sans-serif" font-size="12">{escape(title or "")}</text>',
        f'<g transform="translate(0,{top})">',
    ]
    for r in range(n_rows):
        y = (n_rows - 1 - r) * cell_px
        for c in range(n_cols):
            if not g.valid[r, c]:
                continue
            v = vals[r, c]
            fill = color(float(v), limit, diverging)
            label = "" if not math.isfinite(v) else f"<title>{v:.3f}</title>"
            out.append(f'<rect x="{c * cell_px}" y="{y}" width="{cell_px}" height="{cell_px}" fill="{fill}">'
                       f"{label}</rect>")
    spec = g.spec
    scale = cell_px / spec.cell_size_ft
    rx = spec.corner_radius_ft * scale
    out.append(f'<rect x="0" y="0" width="{w}" height="{h}" rx="{rx:.2f}" ry="{rx:.2f}" fill="none" '
               f'stroke="#333" stroke-width="1.5"/>')
    for xft, col in ((-spec.blue_line_offset_ft, "#1f4e9c"), (0.0, "#c00"), (spec.blue_line_offset_ft, "#1f4e9c")):
        px = (xft + spec.length_ft / 2) * scale
        out.append(f'<line x1="{px:.2f}" y1="0" x2="{px:.2f}" y2="{h}" stroke="{col}" stroke-width="2"/>')
    for xft in (-spec.goal_x, spec.goal_x):
        px = (xft + spec.length_ft / 2) * scale
        out.append(f'<line x1="{px:.2f}" y1="0" x2="{px:.2f}" y2="{h}" stroke="#c00" stroke-width="1"/>')
    out.append("</g>")
    # legend bar
    ly = h + top + 6
    steps = 20
    bw = min(w // 2, 240) / steps
    for i in range(steps + 1):
        frac = i / steps
        v = (-limit + 2 * limit * frac) if diverging else limit * frac
        out.append(f'<rect x="{4 + i * bw:.2f}" y="{ly}" width="{bw:.2f}" height="10" '
                   f'fill="{color(v, limit, diverging)}"/>')
    lo = -limit if diverging and limit > 0 else 0.0
    out.append(f'<text x="4" y="{ly + 21}" font-family="sans-serif" font-size="9">{lo:.2f}</text>')
    out.append(f'<text x="{4 + steps * bw:.2f}" y="{ly + 21}" font-family="sans-serif" font-size="9">'
               f"{limit:.2f} ft/s</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
