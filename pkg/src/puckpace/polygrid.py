"""Square-cell accumulation grid over the rink.

Column 0 starts at ``x_north = -length/2`` (the attacking team's own end) and
row 0 at ``y_east = -width/2``.  Cells are half-open ``[lo, hi)`` except the
last column/row, which also own the rink edge.

A segment between two events visits every cell that contains a
positive-length piece of it.  Crossing parameters of all interior grid lines
are sorted per segment; the midpoint of every gap between consecutive
crossings names one visited cell, so lattice-corner touches (zero-length
gaps) never add a cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError, RinkBoundaryError
from .rink import NormalizedPoint, RinkSpec, contains_many

# gaps shorter than this (ft) are lattice-corner touches, not visits
MIN_PIECE_FT = 1e-9
CHUNK = 32768
ALLOCATIONS = ("equal", "chord")


def grid_shape(spec: RinkSpec) -> Tuple[int, int]:
    cols = spec.length_ft / spec.cell_size_ft
    rows = spec.width_ft / spec.cell_size_ft
    if abs(cols - round(cols)) > 1e-9 or abs(rows - round(rows)) > 1e-9:
        raise ConfigError(
            f"rink {spec.length_ft}x{spec.width_ft} ft is not divisible into {spec.cell_size_ft} ft cells"
        )
    return int(round(rows)), int(round(cols))


def valid_cells(spec: RinkSpec) -> np.ndarray:
    """Cells with at least one point inside the rounded-corner boundary."""
    n_rows, n_cols = grid_shape(spec)
    cs = spec.cell_size_ft
    x_lo = -spec.half_length + cs * np.arange(n_cols)
    y_lo = -spec.half_width + cs * np.arange(n_rows)
    X0, Y0 = np.meshgrid(x_lo, y_lo)
    X1, Y1 = X0 + cs, Y0 + cs
    r = spec.corner_radius_ft
    if r == 0:
        return np.ones((n_rows, n_cols), dtype=bool)
    cx = spec.half_length - r
    cy = spec.half_width - r
    # any part of the cell inside the central cross is in the rink
    in_cross = ((X0 <= cx) & (X1 >= -cx)) | ((Y0 <= cy) & (Y1 >= -cy))
    near_disk = np.zeros_like(in_cross)
    for sx in (-1, 1):
        for sy in (-1, 1):
            px = np.clip(sx * cx, X0, X1)
            py = np.clip(sy * cy, Y0, Y1)
            near_disk |= (px - sx * cx) ** 2 + (py - sy * cy) ** 2 <= r * r
    return in_cross | near_disk


@dataclass
class Polygrid:
    spec: RinkSpec
    valid: np.ndarray
    dist: np.ndarray
    time: np.ndarray
    leak_dist: float = 0.0
    leak_time: float = 0.0
    n_segments: int = 0

    @property
    def n_rows(self) -> int:
        return self.valid.shape[0]

    @property
    def n_cols(self) -> int:
        return self.valid.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def empty_like(self) -> "Polygrid":
        return Polygrid(self.spec, self.valid.copy(), np.zeros_like(self.dist), np.zeros_like(self.time))

    def merge(self, other: "Polygrid") -> "Polygrid":
        if other.spec != self.spec:
            raise ConfigError("cannot merge grids built on different rink specs")
        return Polygrid(self.spec, self.valid.copy(), self.dist + other.dist, self.time + other.time,
                        self.leak_dist + other.leak_dist, self.leak_time + other.leak_time,
                        self.n_segments + other.n_segments)

    def total_dist(self) -> float:
        return float(self.dist.sum()) + self.leak_dist

    def total_time(self) -> float:
        return float(self.time.sum()) + self.leak_time

    def accumulate(self, sample, allocation: str = "equal") -> None:
        """Add one PaceSample."""
        self.accumulate_arrays(
            np.array([sample.start.x_north]), np.array([sample.start.y_east]),
            np.array([sample.end.x_north]), np.array([sample.end.y_east]),
            np.array([sample.d_total]), np.array([sample.dt]), allocation=allocation,
        )

    def accumulate_frame(self, samples: pd.DataFrame, allocation: str = "equal", mirror: bool = False) -> None:
        s = -1.0 if mirror else 1.0
        self.accumulate_arrays(
            s * samples["x0"].to_numpy(float), s * samples["y0"].to_numpy(float),
            s * samples["x1"].to_numpy(float), s * samples["y1"].to_numpy(float),
            samples["d_total"].to_numpy(float), samples["dt"].to_numpy(float), allocation=allocation,
        )

    def accumulate_arrays(self, x0, y0, x1, y1, d, dt, allocation: str = "equal") -> None:
        if allocation not in ALLOCATIONS:
            raise ValueError(f"unknown allocation {allocation!r}")
        n = len(d)
        if n == 0:
            return
        ncell = self.n_rows * self.n_cols
        dist = np.zeros(ncell)
        time = np.zeros(ncell)
        for lo in range(0, n, CHUNK):
            sl = slice(lo, lo + CHUNK)
            seg, cell, frac = traverse_batch(self.spec, x0[sl], y0[sl], x1[sl], y1[sl], self.n_cols, self.n_rows)
            if allocation == "equal":
                k = np.bincount(seg, minlength=len(d[sl]))
                wd = d[sl][seg] / k[seg]
                wt = dt[sl][seg] / k[seg]
            else:
                wd = d[sl][seg] * frac
                wt = dt[sl][seg] * frac
            dist += np.bincount(cell, weights=wd, minlength=ncell)
            time += np.bincount(cell, weights=wt, minlength=ncell)
        dist = dist.reshape(self.n_rows, self.n_cols)
        time = time.reshape(self.n_rows, self.n_cols)
        inv = ~self.valid
        self.leak_dist += float(dist[inv].sum())
        self.leak_time += float(time[inv].sum())
        dist[inv] = 0.0
        time[inv] = 0.0
        self.dist += dist
        self.time += time
        self.n_segments += n

    def speed(self, min_exposure: float = 1.0) -> "SpeedGrid":
        """Per-cell speed; cells with less than ``min_exposure`` seconds are masked."""
        ok = self.valid & (self.time >= min_exposure) & (self.time > 0)
        vals = np.full(self.dist.shape, np.nan)
        vals[ok] = self.dist[ok] / self.time[ok]
        return SpeedGrid(self.spec, vals, self.valid.copy())


def build_grid(spec: RinkSpec) -> Polygrid:
    valid = valid_cells(spec)
    return Polygrid(spec, valid, np.zeros(valid.shape), np.zeros(valid.shape))


def traverse_batch(spec: RinkSpec, x0, y0, x1, y1, n_cols: Optional[int] = None, n_rows: Optional[int] = None,
                   check: bool = True):
    """Visited cells for many segments at once.

    Returns ``(segment_index, flat_cell, fraction)`` in segment order and, per
    segment, in order along the segment.  ``fraction`` is the share of the
    segment's length inside the cell.
    """
    if n_cols is None:
        n_rows, n_cols = grid_shape(spec)
    x0 = np.asarray(x0, float)
    y0 = np.asarray(y0, float)
    x1 = np.asarray(x1, float)
    y1 = np.asarray(y1, float)
    n = len(x0)
    if check and n:
        ok = contains_many(spec, x0, y0) & contains_many(spec, x1, y1)
        if not ok.all():
            i = int(np.flatnonzero(~ok)[0])
            raise RinkBoundaryError(f"segment {i} has an endpoint outside the rink")
    cs = spec.cell_size_ft
    seglen = np.hypot(x1 - x0, y1 - y0)
    # crossing parameters from foot-space differences: grid-line positions are
    # exact, so t keeps full relative precision even for near-parallel segments
    xs = -spec.half_length + cs * np.arange(1, n_cols)
    ys = -spec.half_width + cs * np.arange(1, n_rows)
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = (xs[None, :] - x0[:, None]) / (x1 - x0)[:, None]
        ty = (ys[None, :] - y0[:, None]) / (y1 - y0)[:, None]
    tx[~((tx > 0) & (tx < 1))] = 1.0
    ty[~((ty > 0) & (ty < 1))] = 1.0
    T = np.concatenate([np.zeros((n, 1)), tx, ty, np.ones((n, 1))], axis=1)
    T.sort(axis=1)
    a = T[:, :-1]
    b = T[:, 1:]
    gap = b - a
    keep = gap * seglen[:, None] > MIN_PIECE_FT
    none = ~keep.any(axis=1)
    # degenerate segments: the cell holding the start point
    keep[none, 0] = True
    b[none, 0] = 0.0
    gap[none, 0] = 1.0
    seg, pos = np.nonzero(keep)
    mid = (a[seg, pos] + b[seg, pos]) * 0.5
    # classify the gap midpoint against the grid lines directly (no offset
    # arithmetic, so points a hair left of a line stay left of it)
    col = np.searchsorted(xs, x0[seg] + mid * (x1 - x0)[seg], side="right").astype(np.int64)
    row = np.searchsorted(ys, y0[seg] + mid * (y1 - y0)[seg], side="right").astype(np.int64)
    cell = row * n_cols + col
    frac = gap[seg, pos]
    if len(cell) > 1:
        dup = np.r_[False, (seg[1:] == seg[:-1]) & (cell[1:] == cell[:-1])]
        if dup.any():
            grp = np.cumsum(~dup) - 1
            frac = np.bincount(grp, weights=frac)
            seg = seg[~dup]
            cell = cell[~dup]
    return seg, cell, frac


def traverse(a: NormalizedPoint, b: NormalizedPoint, grid: Polygrid) -> List[Tuple[int, int]]:
    """Ordered ``(col, row)`` cells visited by the segment a->b."""
    _seg, cell, _frac = traverse_batch(grid.spec, [a.x_north], [a.y_east], [b.x_north], [b.y_east],
                                       grid.n_cols, grid.n_rows)
    return [(int(c % grid.n_cols), int(c // grid.n_cols)) for c in cell]


@dataclass
class SpeedGrid:
    spec: RinkSpec
    values: np.ndarray  # NaN where masked or outside the rink
    valid: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return self.valid & ~np.isnan(self.values)

    def mirrored(self) -> "SpeedGrid":
        return SpeedGrid(self.spec, self.values[::-1, ::-1].copy(), self.valid[::-1, ::-1].copy())


def gaussian_weights(sigma: float = 0.5) -> np.ndarray:
    d = np.arange(-1, 2)
    dc, dr = np.meshgrid(d, d)
    return np.exp(-(dc ** 2 + dr ** 2) / (2.0 * sigma ** 2))


def smooth(g: SpeedGrid, sigma: float = 0.5) -> SpeedGrid:
    """3x3 Gaussian weighted average over defined neighbours.

    Written as ``v + sum w (v_j - v) / sum w`` so a constant field is returned
    bit-for-bit.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    w = gaussian_weights(sigma)
    ok = g.defined
    v = np.where(ok, g.values, 0.0)
    R, C = v.shape
    vp = np.zeros((R + 2, C + 2))
    okp = np.zeros((R + 2, C + 2), dtype=bool)
    vp[1:-1, 1:-1] = v
    okp[1:-1, 1:-1] = ok
    num = np.zeros((R, C))
    den = np.zeros((R, C))
    for i in range(3):
        for j in range(3):
            nb = vp[i:i + R, j:j + C]
            m = okp[i:i + R, j:j + C]
            num += np.where(m, w[i, j] * (nb - v), 0.0)
            den += np.where(m, w[i, j], 0.0)
    out = np.full((R, C), np.nan)
    out[ok] = v[ok] + num[ok] / den[ok]
    return SpeedGrid(g.spec, out, g.valid.copy())


def diff(a: SpeedGrid, b: SpeedGrid, pre_smooth: bool = False, sigma: float = 0.5) -> SpeedGrid:
    if a.spec != b.spec or a.values.shape != b.values.shape:
        raise ConfigError("differential grids need identical rink specs")
    if pre_smooth:
        a, b = smooth(a, sigma), smooth(b, sigma)
    ok = a.defined & b.defined
    out = np.full(a.values.shape, np.nan)
    out[ok] = a.values[ok] - b.values[ok]
    return SpeedGrid(a.spec, out, a.valid & b.valid)


def _cell_text(v: float) -> str:
    if not math.isfinite(v):
        return ""
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def grid_csv(g: SpeedGrid) -> str:
    """Matrix CSV: first line is the row-0 (y = -width/2) strip, columns run from
    x = -length/2; masked or out-of-rink cells are empty fields."""
    lines = []
    for r in range(g.values.shape[0]):
        lines.append(",".join(_cell_text(v) if ok else "" for v, ok in zip(g.values[r], g.valid[r])))
    return "\n".join(lines) + "\n"


def parse_grid_csv(text: str, spec: RinkSpec) -> SpeedGrid:
    rows = [line.split(",") for line in text.strip("\n").split("\n")]
    vals = np.array([[float(c) if c else np.nan for c in r] for r in rows])
    return SpeedGrid(spec, vals, valid_cells(spec))
