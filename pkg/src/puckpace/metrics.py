"""Speed aggregation over pace samples.

Default weighting is by time: every group's speed is its distance sum over
its time sum.  ``weighting="mean"`` averages per-transition speeds instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .sequencing import PaceSample

COMPONENTS = ("t", "ew", "ns", "n")
DIST_COLS = ("d_total", "d_ew", "d_ns", "d_n")
PHI_COLS = ("phi_t", "phi_ew", "phi_ns", "phi_n")
PCT_COLS = ("pct_t", "pct_ew", "pct_ns", "pct_n")
WEIGHTINGS = ("time", "mean")


@dataclass(frozen=True)
class SpeedVector:
    sum_d_total: float = 0.0
    sum_d_ew: float = 0.0
    sum_d_ns: float = 0.0
    sum_d_n: float = 0.0
    sum_dt: float = 0.0
    n_samples: int = 0
    # per-transition speed sums, used only by the mean-of-speeds weighting
    sum_v_total: float = 0.0
    sum_v_ew: float = 0.0
    sum_v_ns: float = 0.0
    sum_v_n: float = 0.0

    @classmethod
    def of(cls, s: PaceSample) -> "SpeedVector":
        return cls(s.d_total, s.d_ew, s.d_ns, s.d_n, s.dt, 1,
                   s.d_total / s.dt, s.d_ew / s.dt, s.d_ns / s.dt, s.d_n / s.dt)

    def merge(self, other: "SpeedVector") -> "SpeedVector":
        return SpeedVector(
            self.sum_d_total + other.sum_d_total,
            self.sum_d_ew + other.sum_d_ew,
            self.sum_d_ns + other.sum_d_ns,
            self.sum_d_n + other.sum_d_n,
            self.sum_dt + other.sum_dt,
            self.n_samples + other.n_samples,
            self.sum_v_total + other.sum_v_total,
            self.sum_v_ew + other.sum_v_ew,
            self.sum_v_ns + other.sum_v_ns,
            self.sum_v_n + other.sum_v_n,
        )

    __add__ = merge

    @property
    def defined(self) -> bool:
        return self.sum_dt > 0

    def _phi(self, d: float) -> Optional[float]:
        return d / self.sum_dt if self.sum_dt > 0 else None

    @property
    def phi_t(self) -> Optional[float]:
        return self._phi(self.sum_d_total)

    @property
    def phi_ew(self) -> Optional[float]:
        return self._phi(self.sum_d_ew)

    @property
    def phi_ns(self) -> Optional[float]:
        return self._phi(self.sum_d_ns)

    @property
    def phi_n(self) -> Optional[float]:
        return self._phi(self.sum_d_n)

    def speeds(self, weighting: str = "time") -> Tuple[Optional[float], ...]:
        if weighting == "time":
            return (self.phi_t, self.phi_ew, self.phi_ns, self.phi_n)
        if weighting == "mean":
            if self.n_samples == 0:
                return (None,) * 4
            n = self.n_samples
            return (self.sum_v_total / n, self.sum_v_ew / n, self.sum_v_ns / n, self.sum_v_n / n)
        raise ValueError(f"unknown weighting {weighting!r}")


EMPTY = SpeedVector()


def aggregate(samples: Iterable[Tuple[Hashable, PaceSample]]) -> Dict[Hashable, SpeedVector]:
    """Fold ``(group_key, sample)`` pairs into one SpeedVector per key."""
    out: Dict[Hashable, SpeedVector] = {}
    for key, s in samples:
        out[key] = out.get(key, EMPTY).merge(SpeedVector.of(s))
    return out


def merge_all(vectors: Iterable[SpeedVector]) -> SpeedVector:
    acc = EMPTY
    for v in vectors:
        acc = acc.merge(v)
    return acc


@dataclass(frozen=True)
class RelativePace:
    pct_t: Optional[float]
    pct_ew: Optional[float]
    pct_ns: Optional[float]
    pct_n: Optional[float]

    def as_tuple(self) -> Tuple[Optional[float], ...]:
        return (self.pct_t, self.pct_ew, self.pct_ns, self.pct_n)


def pct_change(a: Optional[float], base: Optional[float]) -> Optional[float]:
    if a is None or base is None or base == 0 or not math.isfinite(base) or not math.isfinite(a):
        return None
    return 100.0 * (a - base) / base


def relative_to(a: SpeedVector, baseline: SpeedVector, weighting: str = "time") -> RelativePace:
    """Percent difference of each component from ``baseline``; ``None`` where
    either side is undefined or the baseline is zero."""
    return RelativePace(*(pct_change(x, b) for x, b in zip(a.speeds(weighting), baseline.speeds(weighting))))


# ---------------------------------------------------------------------------
# columnar aggregation


def add_speed_columns(samples: pd.DataFrame) -> pd.DataFrame:
    out = samples.copy()
    for c, v in zip(DIST_COLS, ("v_total", "v_ew", "v_ns", "v_n")):
        out[v] = out[c].to_numpy() / out["dt"].to_numpy()
    return out


def aggregate_frame(samples: pd.DataFrame, by: Sequence[str], weighting: str = "time") -> pd.DataFrame:
    """One row per group of ``by`` with accumulators and the four speeds.

    Groups are emitted in sorted key order; accumulation follows row order so
    identical inputs give bit-identical sums.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}")
    by = list(by)
    work = add_speed_columns(samples) if len(samples) else samples.assign(
        v_total=[], v_ew=[], v_ns=[], v_n=[])
    cols = list(DIST_COLS) + ["dt", "v_total", "v_ew", "v_ns", "v_n"]
    if by:
        keys = work[by].astype(object) if len(work) else work[by]
        g = work[cols].groupby([keys[c] for c in by], sort=True, observed=True, dropna=False)
        sums = g.sum()
        sums["n"] = g.size()
        sums = sums.reset_index()
    else:
        sums = pd.DataFrame([work[cols].sum()]) if len(work) else pd.DataFrame([{c: 0.0 for c in cols}])
        sums["n"] = len(work)
    out = pd.DataFrame({c: sums[c] for c in by}) if by else pd.DataFrame(index=sums.index)
    for phi, c, v in zip(PHI_COLS, DIST_COLS, ("v_total", "v_ew", "v_ns", "v_n")):
        if weighting == "time":
            out[phi] = np.where(sums["dt"] > 0, sums[c] / sums["dt"].where(sums["dt"] > 0, 1.0), np.nan)
        else:
            out[phi] = np.where(sums["n"] > 0, sums[v] / sums["n"].where(sums["n"] > 0, 1), np.nan)
    for c in DIST_COLS:
        out["sum_" + c] = sums[c]
    out["sum_dt"] = sums["dt"]
    out["n_samples"] = sums["n"].astype(np.int64)
    return out.reset_index(drop=True)


def frame_vector(samples: pd.DataFrame) -> SpeedVector:
    """Whole-frame SpeedVector."""
    if not len(samples):
        return EMPTY
    dt = samples["dt"].to_numpy()
    d = [samples[c].to_numpy() for c in DIST_COLS]
    return SpeedVector(
        float(d[0].sum()), float(d[1].sum()), float(d[2].sum()), float(d[3].sum()), float(dt.sum()),
        len(samples),
        float((d[0] / dt).sum()), float((d[1] / dt).sum()), float((d[2] / dt).sum()), float((d[3] / dt).sum()),
    )


def row_vector(row) -> SpeedVector:
    """SpeedVector from an ``aggregate_frame`` row (mean-speed sums omitted)."""
    return SpeedVector(row["sum_d_total"], row["sum_d_ew"], row["sum_d_ns"], row["sum_d_n"],
                       row["sum_dt"], int(row["n_samples"]))


def with_relative(table: pd.DataFrame, baseline: pd.DataFrame, on: Sequence[str]) -> pd.DataFrame:
    """Append pct_* columns comparing each row to the baseline row sharing ``on``."""
    on = list(on)
    base = baseline[on + list(PHI_COLS)].rename(columns={p: "base_" + p for p in PHI_COLS})
    merged = table.merge(base, on=on, how="left") if on else table.assign(
        **{"base_" + p: baseline[p].iloc[0] for p in PHI_COLS})
    for p, pct in zip(PHI_COLS, PCT_COLS):
        b = merged["base_" + p].to_numpy(dtype=float)
        a = merged[p].to_numpy(dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            merged[pct] = np.where((b != 0) & np.isfinite(b), 100.0 * (a - b) / b, np.nan)
    return merged.drop(columns=["base_" + p for p in PHI_COLS])
