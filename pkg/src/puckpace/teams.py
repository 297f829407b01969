"""Team attacking and defending pace, by zone and by polygrid.

Attacking pace of team T pools the samples of T's own sequences; defending
pace pools the samples of sequences played *against* T.  Both are compared
with the league-wide pool of attacking samples, which by default includes T.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import AnalysisError
from .metrics import DIST_COLS, PCT_COLS, PHI_COLS, aggregate_frame
from .polygrid import Polygrid, SpeedGrid, build_grid, diff
from .sequencing import SequenceTable

SIDES = ("attacking", "defending")


def _side_key(side: str) -> str:
    if side == "attacking":
        return "team_id"
    if side == "defending":
        return "opponent"
    raise ValueError(f"side must be 'attacking' or 'defending', got {side!r}")


def _pct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where((b != 0) & np.isfinite(b), 100.0 * (a - b) / b, np.nan)


def team_zonal(tab: SequenceTable, manpower: Optional[Tuple[int, int]] = (5, 5), weighting: str = "time",
               leave_one_out: bool = False) -> pd.DataFrame:
    """One row per (team, side, zone) with speeds and percent vs league.

    ``leave_one_out`` drops the team's own side samples from its baseline.
    """
    samples = tab.filter_manpower(manpower)
    league = aggregate_frame(samples, ["zone"], weighting).set_index("zone")
    teams = sorted(set(samples["team_id"].astype(str)) | set(samples["opponent"].dropna().astype(str)))
    parts = []
    for side in SIDES:
        key = _side_key(side)
        agg = aggregate_frame(samples, [key, "zone"], weighting).rename(columns={key: "team_id"})
        agg.insert(1, "side", side)
        if leave_one_out:
            base = np.full((len(agg), len(PHI_COLS)), np.nan)
            col = samples[key].astype(str).to_numpy()
            for t in teams:
                rows = np.flatnonzero(agg["team_id"].astype(str).to_numpy() == t)
                if not len(rows):
                    continue
                rest = aggregate_frame(samples[col != t], ["zone"], weighting).set_index("zone")
                for r in rows:
                    z = agg["zone"].iat[r]
                    if z in rest.index:
                        base[r] = rest.loc[z, list(PHI_COLS)].to_numpy(float)
        else:
            base = league.reindex(agg["zone"].to_numpy())[list(PHI_COLS)].to_numpy(float)
        for j, (phi, pct) in enumerate(zip(PHI_COLS, PCT_COLS)):
            agg[pct] = _pct(agg[phi].to_numpy(float), base[:, j])
        parts.append(agg)
    out = pd.concat(parts, ignore_index=True) if parts else pd.DataFrame()
    if not len(out):
        return out
    out["team_id"] = out["team_id"].astype(str)
    out["zone"] = out["zone"].astype(str)
    out = out.sort_values(["team_id", "side", "zone"], key=lambda s: s.map(_ZONE_ORDER) if s.name == "zone" else s,
                          kind="stable").reset_index(drop=True)
    cols = ["team_id", "side", "zone", *PHI_COLS, *PCT_COLS, *("sum_" + c for c in DIST_COLS), "sum_dt",
            "n_samples"]
    return out[cols]


_ZONE_ORDER = {"DZ": 0, "NZ": 1, "OZ": 2}


def league_zonal(tab: SequenceTable, by: Sequence[str] = ("zone",), manpower: Optional[Tuple[int, int]] = None,
                 weighting: str = "time") -> pd.DataFrame:
    """Plain group-by over samples (the ``pace-zonal`` table)."""
    return aggregate_frame(tab.filter_manpower(manpower), list(by), weighting)


@dataclass
class TeamGrid:
    team_id: str
    side: str
    team: Polygrid
    league: Polygrid
    differential: SpeedGrid


def side_grid(tab: SequenceTable, team: Optional[str], side: str = "attacking",
              manpower: Optional[Tuple[int, int]] = (5, 5), allocation: str = "equal",
              exclude: Optional[str] = None) -> Polygrid:
    """Accumulate a grid over one team's side samples (``team=None`` for the
    whole league).  Defending grids are mirrored so the team's DZ is on the left."""
    samples = tab.filter_manpower(manpower)
    key = _side_key(side)
    if team is not None:
        samples = samples[samples[key].astype(str).to_numpy() == team]
    if exclude is not None:
        samples = samples[samples[key].astype(str).to_numpy() != exclude]
    g = build_grid(tab.rink)
    g.accumulate_frame(samples, allocation=allocation, mirror=side == "defending")
    return g


def team_polygrid(tab: SequenceTable, team: str, side: str = "attacking",
                  manpower: Optional[Tuple[int, int]] = (5, 5), sigma: float = 0.5, min_exposure: float = 60.0,
                  allocation: str = "equal", pre_smooth: bool = True, leave_one_out: bool = False,
                  league_grid: Optional[Polygrid] = None) -> TeamGrid:
    """Team grid minus league grid, both smoothed first by default."""
    key = _side_key(side)
    known = set(tab.samples[key].dropna().astype(str))
    if team not in known:
        raise AnalysisError(f"team {team!r} has no {side} samples")
    tg = side_grid(tab, team, side, manpower, allocation)
    if leave_one_out:
        lg = side_grid(tab, None, side, manpower, allocation, exclude=team)
    else:
        lg = league_grid if league_grid is not None else side_grid(tab, None, side, manpower, allocation)
    d = diff(tg.speed(min_exposure), lg.speed(min_exposure), pre_smooth=pre_smooth, sigma=sigma)
    return TeamGrid(team, side, tg, lg, d)


def repeatability(a: pd.DataFrame, b: pd.DataFrame, value: str = "pct_t") -> Tuple[pd.DataFrame, Dict[tuple, float]]:
    """Pair two ``team_zonal`` tables (e.g. consecutive seasons) and give the
    Pearson correlation of ``value`` per (side, zone)."""
    keys = ["team_id", "side", "zone"]
    paired = a[keys + [value]].merge(b[keys + [value]], on=keys, suffixes=("_a", "_b"))
    corr: Dict[tuple, float] = {}
    for (side, zone), grp in paired.groupby(["side", "zone"], sort=True):
        x = grp[value + "_a"].to_numpy(float)
        y = grp[value + "_b"].to_numpy(float)
        ok = np.isfinite(x) & np.isfinite(y)
        corr[(side, zone)] = float(np.corrcoef(x[ok], y[ok])[0, 1]) if ok.sum() >= 3 else float("nan")
    return paired, corr
