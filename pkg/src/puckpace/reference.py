"""Brute-force reference computations.

These deliberately avoid the production algorithms in ``polygrid`` and
``sequencing`` so they can serve as independent oracles: the synthetic
generator's truth ledger and the test-suite both lean on them.
"""

from __future__ import annotations

import math
from typing import List, Set, Tuple

import numpy as np

from .rink import RinkSpec


def _shape(spec: RinkSpec) -> Tuple[int, int]:
    return int(round(spec.width_ft / spec.cell_size_ft)), int(round(spec.length_ft / spec.cell_size_ft))


def point_cell(spec: RinkSpec, x: float, y: float) -> Tuple[int, int]:
    """(col, row) of the half-open cell holding a point; the far rink edges
    belong to the last column/row."""
    n_rows, n_cols = _shape(spec)
    return _index(x, -spec.length_ft / 2, spec.cell_size_ft, n_cols), _index(y, -spec.width_ft / 2,
                                                                          spec.cell_size_ft, n_rows)


def _index(v: float, origin: float, cs: float, n: int) -> int:
    i = math.floor((v - origin) / cs)
    # the offset can round a point across a line; settle it by direct comparison
    while i > 0 and v < origin + cs * i:
        i -= 1
    while i < n - 1 and v >= origin + cs * (i + 1):
        i += 1
    return min(max(i, 0), n - 1)


def supersample_cells(spec: RinkSpec, x0: float, y0: float, x1: float, y1: float,
                      n: int = 10_000) -> Set[Tuple[int, int]]:
    """Cells holding any of ``n`` evenly spaced points along the segment."""
    out = set()
    for i in range(n):
        t = (i + 0.5) / n
        out.add(point_cell(spec, x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
    return out


def clip_lengths(spec: RinkSpec, x0, y0, x1, y1) -> np.ndarray:
    """Length (ft) of each segment inside each half-open cell.

    Returns an array of shape (n_segments, n_rows * n_cols) computed by
    clipping every segment against every cell (Liang-Barsky).
    """
    n_rows, n_cols = _shape(spec)
    cs = spec.cell_size_ft
    x0 = np.asarray(x0, float)[:, None]
    y0 = np.asarray(y0, float)[:, None]
    x1 = np.asarray(x1, float)[:, None]
    y1 = np.asarray(y1, float)[:, None]
    cols = np.tile(np.arange(n_cols), n_rows)
    rows = np.repeat(np.arange(n_rows), n_cols)
    lo_x = (-spec.length_ft / 2 + cs * cols)[None, :]
    lo_y = (-spec.width_ft / 2 + cs * rows)[None, :]
    hi_x = lo_x + cs
    hi_y = lo_y + cs
    last_col = (cols == n_cols - 1)[None, :]
    last_row = (rows == n_rows - 1)[None, :]
    dx = x1 - x0
    dy = y1 - y0
    t_in = np.zeros((x0.shape[0], cols.size))
    t_out = np.ones_like(t_in)
    for p0, d, lo, hi, last in ((x0, dx, lo_x, hi_x, last_col), (y0, dy, lo_y, hi_y, last_row)):
        moving = d != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo - p0) / d
            tb = (hi - p0) / d
        enter = np.where(moving, np.minimum(ta, tb), -np.inf)
        leave = np.where(moving, np.maximum(ta, tb), np.inf)
        # a segment parallel to this axis must sit inside the half-open slab
        still_in = (p0 >= lo) & ((p0 < hi) | (last & (p0 <= hi)))
        enter = np.where(~moving & ~still_in, np.inf, enter)
        t_in = np.maximum(t_in, enter)
        t_out = np.minimum(t_out, leave)
    length = np.hypot(dx, dy)
    return np.clip(t_out - t_in, 0.0, None) * length


def clip_cells(spec: RinkSpec, x0: float, y0: float, x1: float, y1: float,
               min_piece: float = 1e-9) -> Set[Tuple[int, int]]:
    n_rows, n_cols = _shape(spec)
    if x0 == x1 and y0 == y1:
        return {point_cell(spec, x0, y0)}
    lengths = clip_lengths(spec, [x0], [y0], [x1], [y1])[0]
    idx = np.flatnonzero(lengths > min_piece)
    if not len(idx):
        # shorter than the corner-touch tolerance: treat as a point
        return {point_cell(spec, x0, y0)}
    return {(int(i % n_cols), int(i // n_cols)) for i in idx}


def cell_shares(spec: RinkSpec, x0: float, y0: float, x1: float, y1: float) -> List[Tuple[int, float]]:
    """Equal shares over the visited cells as ``(flat_cell, share)`` pairs."""
    n_rows, n_cols = _shape(spec)
    cells = sorted(r * n_cols + c for c, r in clip_cells(spec, x0, y0, x1, y1))
    return [(c, 1.0 / len(cells)) for c in cells]


def brute_valid_cells(spec: RinkSpec, per_side: int = 101) -> np.ndarray:
    """Cell validity by sampling a ``per_side`` x ``per_side`` lattice (edges
    included) in every cell and testing each point against the rink outline."""
    n_rows, n_cols = _shape(spec)
    cs = spec.cell_size_ft
    hl, hw, r = spec.length_ft / 2, spec.width_ft / 2, spec.corner_radius_ft
    s = np.linspace(0.0, cs, per_side)
    out = np.zeros((n_rows, n_cols), dtype=bool)
    for row in range(n_rows):
        for col in range(n_cols):
            X, Y = np.meshgrid(-hl + col * cs + s, -hw + row * cs + s)
            ax, ay = np.abs(X), np.abs(Y)
            corner = (ax > hl - r) & (ay > hw - r)
            far = (ax - (hl - r)) ** 2 + (ay - (hw - r)) ** 2 > r * r
            out[row, col] = bool((~(corner & far)).any())
    return out
