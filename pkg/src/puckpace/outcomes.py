"""Outcome analyses: entry danger, pre-shot pace quintiles, pass speeds by
reception outcome, and per-game tendency counters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import AnalysisError
from .rink import zone_codes
from .sequencing import SequenceTable

DANGER_CLASSES: Dict[str, str] = {
    "1-on-0": "High",
    "3-on-1": "High",
    "2-on-1": "High",
    "3-on-2": "Medium",
    "1-on-1": "Medium",
    "2-on-2": "Medium",
    "3-on-3": "Low",
    "1-on-2": "Low",
    "2-on-3": "Low",
    "dump-in": "Very Low",
}
CLASS_ORDER = ("High", "Medium", "Low", "Very Low")
ODD_MAN = frozenset({(1, 0), (2, 1), (3, 1), (3, 2)})


def danger_class(entry_type: str) -> Optional[str]:
    return DANGER_CLASSES.get(entry_type)


def entry_type(controlled: bool, attackers: Optional[int], defenders: Optional[int]) -> str:
    if not controlled:
        return "dump-in"
    if attackers is None or defenders is None or (attackers == 0 and defenders == 0):
        return "other"
    key = f"{attackers}-on-{defenders}"
    return key if key in DANGER_CLASSES else "other"


def _mp_mask(f: pd.DataFrame, manpower: Optional[Tuple[int, int]]) -> np.ndarray:
    if manpower is None:
        return np.ones(len(f), dtype=bool)
    return (f["own_skaters"].to_numpy() == manpower[0]) & (f["opp_skaters"].to_numpy() == manpower[1])


def _types(f: pd.DataFrame) -> np.ndarray:
    return f["event_type"].astype(str).to_numpy(dtype=object)


def _seq_at(tab: SequenceTable, rows: np.ndarray, team: np.ndarray) -> np.ndarray:
    """Standard sequence of the latest possession event at or before each row,
    or -1 when it lies in another game/period or belongs to another team."""
    f = tab.log.frame
    P = tab.poss_rows
    if not len(P) or not len(rows):
        return np.full(len(rows), -1, dtype=np.int64)
    pos = np.searchsorted(P, rows, side="right") - 1
    ok = pos >= 0
    p = P[np.clip(pos, 0, None)]
    g = f["game_id"].astype(str).to_numpy(dtype=object)
    per = f["period"].to_numpy()
    tm = f["team_id"].astype(str).to_numpy(dtype=object)
    ok &= (g[p] == g[rows]) & (per[p] == per[rows]) & (tm[p] == team)
    return np.where(ok, tab.seq_of[np.clip(pos, 0, None)], -1)


class _SeqSamples:
    """Per-sequence cumulative sums over samples ordered by their later time."""

    def __init__(self, tab: SequenceTable):
        s = tab.samples
        self.seq = s["seq"].to_numpy()
        self.t1 = s["t1"].to_numpy()
        self.d = s["d_total"].to_numpy()
        self.dt = s["dt"].to_numpy()
        n_seq = len(tab.sequences)
        self.lo = np.searchsorted(self.seq, np.arange(n_seq), side="left")
        self.hi = np.searchsorted(self.seq, np.arange(n_seq), side="right")

    def pace(self, seq: int, t_from: float, t_to: float) -> Tuple[float, float]:
        """(sum d_total, sum dt) of samples of ``seq`` with t_from <= t1 <= t_to."""
        a, b = self.lo[seq], self.hi[seq]
        t = self.t1[a:b]
        m = (t >= t_from) & (t <= t_to)
        return float(self.d[a:b][m].sum()), float(self.dt[a:b][m].sum())


# ---------------------------------------------------------------------------
# entries


@dataclass
class EntryResult:
    by_type: pd.DataFrame
    by_class: pd.DataFrame
    entries: pd.DataFrame


def entry_table(tab: SequenceTable, manpower: Optional[Tuple[int, int]] = (5, 5),
                shot_window: float = 5.0, shooting_window: float = 5.0) -> EntryResult:
    """Per entry type: count, shot-after %, shooting %, preceding pace, class.

    Shot-after % is the share of entries followed by at least one on-goal shot
    by the entering team within ``shot_window`` seconds (same period).
    Shooting % is goals over on-goal shots taken within ``shooting_window``.
    Preceding pace pools the entering sequence's samples whose later event is
    at or before the entry; class values average entries, not time.
    """
    f = tab.log.frame
    et = _types(f)
    erows = np.flatnonzero((et == "zone_entry") & _mp_mask(f, manpower))
    game = f["game_id"].astype(str).to_numpy(dtype=object)
    per = f["period"].to_numpy()
    team = f["team_id"].astype(str).to_numpy(dtype=object)
    t = f["t_s"].to_numpy()
    ctl = f["controlled"].to_numpy(dtype=object)
    att = f["attackers"].to_numpy(dtype=object)
    dfn = f["defenders"].to_numpy(dtype=object)

    def _int(v):
        return None if v is None or v is pd.NA or (isinstance(v, float) and np.isnan(v)) else int(v)

    types = [entry_type(bool(ctl[i]) if ctl[i] is not pd.NA else False, _int(att[i]), _int(dfn[i])) for i in erows]

    # shots by (game, period, team), sorted by time
    srows = np.flatnonzero(et == "shot")
    on_goal = f["on_goal"].fillna(False).to_numpy(dtype=bool)
    goal = f["goal"].fillna(False).to_numpy(dtype=bool)
    shot_groups: Dict[tuple, np.ndarray] = {}
    for r in srows:
        shot_groups.setdefault((game[r], per[r], team[r]), []).append(r)
    shot_groups = {k: np.asarray(v) for k, v in shot_groups.items()}

    seqs = _seq_at(tab, erows, team[erows])
    ss = _SeqSamples(tab)
    n_sog, n_og, n_goal, pace = [], [], [], []
    for i, r in enumerate(erows):
        grp = shot_groups.get((game[r], per[r], team[r]), np.zeros(0, dtype=np.int64))
        st = t[grp]
        w1 = grp[(st > t[r]) & (st <= t[r] + shot_window)]
        w2 = grp[(st > t[r]) & (st <= t[r] + shooting_window)]
        n_sog.append(int(on_goal[w1].sum()))
        n_og.append(int(on_goal[w2].sum()))
        n_goal.append(int((goal[w2] & on_goal[w2]).sum()))
        s = seqs[i]
        if s >= 0:
            d, dt = ss.pace(int(s), -np.inf, t[r])
            pace.append(d / dt if dt > 0 else np.nan)
        else:
            pace.append(np.nan)
    entries = pd.DataFrame({
        "event_id": f["event_id"].to_numpy(dtype=object)[erows],
        "game_id": game[erows],
        "team_id": team[erows],
        "entry_type": np.asarray(types, dtype=object),
        "danger_class": [DANGER_CLASSES.get(k) for k in types],
        "shots_on_goal_after": np.asarray(n_sog, dtype=np.int64),
        "shots_on_goal": np.asarray(n_og, dtype=np.int64),
        "goals": np.asarray(n_goal, dtype=np.int64),
        "phi_t": np.asarray(pace, dtype=float),
    })
    order = list(DANGER_CLASSES) + ["other"]
    rows = []
    for k in order:
        e = entries[entries["entry_type"] == k]
        rows.append(_entry_row(k, e, DANGER_CLASSES.get(k)))
    by_type = pd.DataFrame(rows)
    crow = []
    for c in CLASS_ORDER:
        e = entries[entries["danger_class"] == c]
        crow.append(_entry_row(c, e, c))
    by_class = pd.DataFrame(crow).rename(columns={"entry_type": "class"}).drop(columns=["danger_class"])
    return EntryResult(by_type, by_class, entries)


def _entry_row(key: str, e: pd.DataFrame, cls: Optional[str]) -> dict:
    n = len(e)
    sog = int(e["shots_on_goal"].sum())
    goals = int(e["goals"].sum())
    paced = e["phi_t"].dropna()
    return {
        "entry_type": key,
        "n": n,
        "shot_after_pct": 100.0 * float((e["shots_on_goal_after"] > 0).sum()) / n if n else np.nan,
        "shooting_pct": 100.0 * goals / sog if sog else np.nan,
        "phi_t": float(paced.mean()) if len(paced) else np.nan,
        "n_paced": len(paced),
        "danger_class": cls,
    }


# ---------------------------------------------------------------------------
# pre-shot quintiles


@dataclass
class QuintileResult:
    table: pd.DataFrame
    shots: pd.DataFrame


def preshot_quintiles(tab: SequenceTable, window: float = 5.0, manpower: Optional[Tuple[int, int]] = (5, 5),
                      n_groups: int = 5) -> QuintileResult:
    """Split non-deflected shots into ``n_groups`` by pre-shot pace.

    Pre-shot pace pools the samples of the shot's own sequence whose later
    event falls in [t_shot - window, t_shot].  Shots without such samples are
    not eligible.  Ties in pace break on event_id.
    """
    f = tab.log.frame
    et = _types(f)
    defl = f["deflected"].fillna(False).to_numpy(dtype=bool)
    srows = np.flatnonzero((et == "shot") & ~defl & _mp_mask(f, manpower))
    team = f["team_id"].astype(str).to_numpy(dtype=object)
    t = f["t_s"].to_numpy()
    seqs = _seq_at(tab, srows, team[srows])
    ss = _SeqSamples(tab)
    pace = np.full(len(srows), np.nan)
    for i, (r, s) in enumerate(zip(srows, seqs)):
        if s >= 0:
            d, dt = ss.pace(int(s), t[r] - window, t[r])
            if dt > 0:
                pace[i] = d / dt
    dist_attr = f["distance_ft"].to_numpy(float)[srows]
    gx = tab.rink.goal_x
    dist_geo = np.hypot(gx - f["x"].to_numpy()[srows], f["y"].to_numpy()[srows])
    shots = pd.DataFrame({
        "event_id": f["event_id"].to_numpy(dtype=object)[srows],
        "pace": pace,
        "goal": f["goal"].fillna(False).to_numpy(dtype=bool)[srows],
        "distance_ft": np.where(np.isfinite(dist_attr), dist_attr, dist_geo),
    })
    shots = shots[np.isfinite(shots["pace"].to_numpy())]
    if len(shots) < n_groups:
        raise AnalysisError(f"need at least {n_groups} eligible shots, found {len(shots)}")
    shots = shots.sort_values(["pace", "event_id"], kind="stable").reset_index(drop=True)
    groups = np.array_split(np.arange(len(shots)), n_groups)
    q = np.empty(len(shots), dtype=np.int64)
    rows = []
    for k, idx in enumerate(groups, 1):
        q[idx] = k
        g = shots.iloc[idx]
        rows.append({
            "quintile": k,
            "n": len(g),
            "phi_t_mean": float(g["pace"].mean()),
            "phi_t_min": float(g["pace"].min()),
            "phi_t_max": float(g["pace"].max()),
            "goals": int(g["goal"].sum()),
            "true_shooting_pct": 100.0 * float(g["goal"].mean()),
            "distance_ft_mean": float(g["distance_ft"].mean()),
        })
    shots["quintile"] = q
    return QuintileResult(pd.DataFrame(rows), shots)


# ---------------------------------------------------------------------------
# pass speeds


@dataclass
class PassSpeedResult:
    table: pd.DataFrame
    passes: pd.DataFrame
    diagnostics: Dict[str, int] = field(default_factory=dict)


def pass_reception_speeds(tab_or_log, manpower: Optional[Tuple[int, int]] = (5, 5)) -> PassSpeedResult:
    """Mean straight-line pass speed per (pass_type, outcome)."""
    log = getattr(tab_or_log, "log", tab_or_log)
    f = log.frame
    et = _types(f)
    prow = np.flatnonzero((et == "pass") & _mp_mask(f, manpower))
    link = f["linked_reception_id"].to_numpy(dtype=object)[prow]
    ids = f["event_id"].to_numpy(dtype=object)
    index = {e: i for i, e in enumerate(ids)}
    target = np.array([index.get(v, -1) if v is not None else -1 for v in link], dtype=np.int64)
    unlinked = target < 0
    tt = np.where(unlinked, 0, target)
    ok_type = np.isin(et[tt], ["reception", "failed_reception"]) & ~unlinked
    diag = {"unlinked": int((~ok_type).sum())}
    prow, tt = prow[ok_type], tt[ok_type]
    t = f["t_s"].to_numpy()
    x = f["x"].to_numpy()
    y = f["y"].to_numpy()
    sign = f["attack_sign"].to_numpy()
    dt = t[tt] - t[prow]
    bad = dt <= 0
    diag["dropped_dt"] = int(bad.sum())
    prow, tt, dt = prow[~bad], tt[~bad], dt[~bad]
    # both ends in file coordinates so a cross-team link still measures real travel
    dx = sign[tt] * x[tt] - sign[prow] * x[prow]
    dy = sign[tt] * y[tt] - sign[prow] * y[prow]
    passes = pd.DataFrame({
        "event_id": ids[prow],
        "pass_type": f["pass_type"].astype(object).to_numpy(dtype=object)[prow],
        "outcome": np.where(et[tt] == "reception", "success", "fail"),
        "speed": np.hypot(dx, dy) / dt,
    })
    table = (passes.groupby(["pass_type", "outcome"], sort=True)["speed"]
             .agg(n="size", mean_speed="mean").reset_index())
    return PassSpeedResult(table, passes, diag)


# ---------------------------------------------------------------------------
# tendency counters


_COUNTERS = ("passes_DZ", "passes_NZ", "passes_OZ", "poss_min_DZ", "poss_min_NZ", "poss_min_OZ",
             "nz_ew_gt10", "nz_ew_gt15", "dz_controlled_exits", "dz_d2d_passes", "dz_stretch_passes",
             "odd_man_rushes")


def tendency_counters(tab: SequenceTable, group_by: Sequence[str] = ("league", "season"),
                      manpower: Optional[Tuple[int, int]] = (5, 5),
                      manpower_intervals: Optional[pd.DataFrame] = None) -> pd.DataFrame:
    """Per-group counters averaged per game.

    Pass counts include failed attempts; zone possession minutes come from the
    time of the zonal pace samples.  The NZ east-west columns count successful
    passes with both ends in the NZ and are also reported per 60 minutes of
    matching-manpower time when intervals are given.
    """
    f = tab.log.frame
    group_by = list(group_by)
    for g in group_by:
        if g not in ("league", "season", "period"):
            raise ValueError(f"cannot group tendency counters by {g!r}")
    et = _types(f)
    mp = _mp_mask(f, manpower)
    zc = zone_codes(f["x"].to_numpy(), tab.rink)
    ptype = f["pass_type"].astype(object).to_numpy(dtype=object)
    ctl = f["controlled"].fillna(False).to_numpy(dtype=bool)
    att = f["attackers"].fillna(-1).to_numpy(dtype=np.int64)
    dfn = f["defenders"].fillna(-1).to_numpy(dtype=np.int64)
    is_pass = (et == "pass") & mp

    # successful NZ -> NZ passes and their east-west displacement
    ids = f["event_id"].to_numpy(dtype=object)
    index = pd.Series(np.arange(len(ids)), index=ids)
    link = f["linked_reception_id"].to_numpy(dtype=object)
    cand = np.flatnonzero(is_pass & (zc == 1) & pd.notna(link))
    j = index.reindex(link[cand]).to_numpy()
    found = ~np.isnan(j)
    cand, j = cand[found], j[found].astype(np.int64)
    keep = (et[j] == "reception") & (zc[j] == 1)
    cand, j = cand[keep], j[keep]
    ew = np.zeros(len(f))
    nz_ok = np.zeros(len(f), dtype=bool)
    y = f["y"].to_numpy()
    ew[cand] = np.abs(y[j] - y[cand])
    nz_ok[cand] = True

    ev = pd.DataFrame({g: f[g].astype(str).to_numpy(dtype=object) for g in group_by})
    ev["game_id"] = f["game_id"].astype(str).to_numpy(dtype=object)
    for code, z in enumerate(("DZ", "NZ", "OZ")):
        ev[f"passes_{z}"] = is_pass & (zc == code)
    ev["nz_ew_gt10"] = nz_ok & (ew > 10)
    ev["nz_ew_gt15"] = nz_ok & (ew > 15)
    ev["dz_controlled_exits"] = (et == "zone_exit") & mp & ctl
    ev["dz_d2d_passes"] = is_pass & (zc == 0) & (ptype == "d2d")
    ev["dz_stretch_passes"] = is_pass & (zc == 0) & (ptype == "stretch")
    odd = np.array([(a, d) in ODD_MAN for a, d in zip(att, dfn)], dtype=bool)
    ev["odd_man_rushes"] = (et == "zone_entry") & mp & ctl & odd
    s = tab.filter_manpower(manpower)
    fr = s["from_row"].to_numpy(dtype=np.int64)
    for z in ("DZ", "NZ", "OZ"):
        col = np.zeros(len(f))
        m = s["zone"].astype(str).to_numpy() == z
        np.add.at(col, fr[m], s["dt"].to_numpy()[m] / 60.0)
        ev[f"poss_min_{z}"] = col

    keys = group_by or None
    if keys:
        grouped = ev.groupby(keys, sort=True)
        sums = grouped[list(_COUNTERS)].sum().astype(float)
        n_games = grouped["game_id"].nunique()
        game_sets = grouped["game_id"].unique()
    else:
        sums = ev[list(_COUNTERS)].sum().astype(float).to_frame().T
        n_games = pd.Series([ev["game_id"].nunique()])
        game_sets = pd.Series([ev["game_id"].unique()])
    out = sums.reset_index() if keys else sums.reset_index(drop=True)
    out.insert(len(group_by), "n_games", n_games.to_numpy())
    n = out["n_games"].to_numpy(float)
    # an empty group has nothing to count, so its per-game rates are zero
    per_game = {f"{c}_per_game": np.divide(out[c].to_numpy(float), n, out=np.zeros(len(n)), where=n > 0)
                for c in _COUNTERS}
    per60 = {}
    for c in ("nz_ew_gt10", "nz_ew_gt15"):
        vals = []
        for i, gs in enumerate(game_sets.to_numpy()):
            period = out["period"].iat[i] if "period" in group_by else None
            m = _state_minutes(manpower_intervals, manpower, gs, period)
            vals.append(60.0 * out[c].iat[i] / m if m else np.nan)
        per60[f"{c}_per_60"] = vals
    lead = out[group_by + ["n_games"]]
    return pd.concat([lead, pd.DataFrame(per_game), pd.DataFrame(per60), out[list(_COUNTERS)]], axis=1)


def _state_minutes(intervals: Optional[pd.DataFrame], manpower, games, period=None) -> Optional[float]:
    """Minutes of the requested manpower state over ``games`` (one period if given)."""
    if intervals is None or not len(intervals):
        return None
    mi = intervals[intervals["game_id"].astype(str).isin(list(games))]
    if period is not None:
        mi = mi[mi["period"].astype(str) == str(period)]
    if manpower is not None:
        a, b = manpower
        hs, as_ = mi["home_skaters"].to_numpy(), mi["away_skaters"].to_numpy()
        # a state and its mirror are the same ice time seen from either bench
        mi = mi[((hs == a) & (as_ == b)) | ((hs == b) & (as_ == a))]
    total = float((mi["end_s"] - mi["start_s"]).sum()) / 60.0
    return total if total > 0 else None
