"""Individual pace attribution and with-or-without-you (WOWY) splits.

Attribution: a sample between two events by different players credits half
of its distance and time to each; when both events belong to one player the
whole sample is theirs.  An endpoint without a player leaves its half
unattributed (tallied).

WOWY: a zonal sequence is *with* a player when they are on the ice at every
event of it (seed event included), *without* when they are on the ice at
none of them and the game is one they played in; anything else is excluded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import AnalysisError
from .metrics import DIST_COLS, PCT_COLS, PHI_COLS
from .sequencing import SequenceTable

_ZONES = ("DZ", "NZ", "OZ")


def positions(shifts: pd.DataFrame) -> pd.DataFrame:
    """Most frequent position per (team, player); ties break alphabetically."""
    if not len(shifts):
        return pd.DataFrame(columns=["team_id", "player_id", "position"])
    c = shifts.groupby(["team_id", "player_id", "position"], sort=True).size().rename("n").reset_index()
    c = c.sort_values(["team_id", "player_id", "n", "position"], ascending=[True, True, False, True], kind="stable")
    return c.drop_duplicates(["team_id", "player_id"])[["team_id", "player_id", "position"]].reset_index(drop=True)


def toi(shifts: pd.DataFrame, manpower: pd.DataFrame, state: Tuple[int, int] = (5, 5)) -> pd.DataFrame:
    """Minutes each (team, player) spent on ice during ``state`` manpower.

    ``state`` is read from the player's side: (own skaters, opponent skaters).
    """
    cols = ["team_id", "player_id", "toi_min"]
    if not len(shifts) or not len(manpower):
        return pd.DataFrame(columns=cols)
    m = shifts.merge(manpower, on=["game_id", "period"], suffixes=("", "_mp"))
    home = m["team_id"].to_numpy(dtype=object) == m["home_team_id"].to_numpy(dtype=object)
    own = np.where(home, m["home_skaters"].to_numpy(), m["away_skaters"].to_numpy())
    opp = np.where(home, m["away_skaters"].to_numpy(), m["home_skaters"].to_numpy())
    lo = np.maximum(m["start_s"].to_numpy(), m["start_s_mp"].to_numpy())
    hi = np.minimum(m["end_s"].to_numpy(), m["end_s_mp"].to_numpy())
    overlap = np.clip(hi - lo, 0.0, None) * ((own == state[0]) & (opp == state[1]))
    out = pd.DataFrame({"team_id": m["team_id"].to_numpy(), "player_id": m["player_id"].to_numpy(),
                        "toi_min": overlap / 60.0})
    return out.groupby(["team_id", "player_id"], sort=True)["toi_min"].sum().reset_index()


@dataclass
class Attribution:
    """Per (team, player, zone) credited sums and the unattributed tally."""

    credits: pd.DataFrame
    unattributed: Dict[str, float] = field(default_factory=dict)


def attribute(samples: pd.DataFrame) -> Attribution:
    fp = samples["from_player"].to_numpy(dtype=object)
    tp = samples["to_player"].to_numpy(dtype=object)
    has_f = np.array([p is not None and p == p for p in fp], dtype=bool)
    has_t = np.array([p is not None and p == p for p in tp], dtype=bool)
    same = has_f & has_t & (fp == tp)
    w_from = np.where(same, 1.0, np.where(has_f, 0.5, 0.0))
    w_to = np.where(same, 0.0, np.where(has_t, 0.5, 0.0))
    lost = 1.0 - w_from - w_to
    vals = {c: samples[c].to_numpy(float) for c in (*DIST_COLS, "dt")}
    unattributed = {c: float((lost * v).sum()) for c, v in vals.items()}
    parts = []
    for who, w, m in ((fp, w_from, w_from > 0), (tp, w_to, w_to > 0)):
        d = {"team_id": samples["team_id"].astype(str).to_numpy()[m], "player_id": who[m],
             "zone": samples["zone"].astype(str).to_numpy()[m], "n_credits": np.ones(int(m.sum()), dtype=np.int64)}
        for c, v in vals.items():
            d[c] = w[m] * v[m]
        parts.append(pd.DataFrame(d))
    allc = pd.concat(parts, ignore_index=True)
    credits = allc.groupby(["team_id", "player_id", "zone"], sort=True)[
        [*DIST_COLS, "dt", "n_credits"]].sum().reset_index()
    return Attribution(credits, unattributed)


def individual_pace(tab: SequenceTable, shifts: pd.DataFrame, manpower: Optional[Tuple[int, int]] = (5, 5)
                    ) -> pd.DataFrame:
    """Per (team, player, zone) speeds and position-adjusted percentages.

    The baseline of a row pools the credited sums of every same-team,
    same-position player in that zone.  Goalies and players with no known
    position are dropped; rows with zero credited time are dropped.
    """
    att = attribute(tab.filter_manpower(manpower)).credits
    pos = positions(shifts)
    att = att.merge(pos, on=["team_id", "player_id"], how="left")
    att = att[att["position"].isin(["F", "D"]) & (att["dt"] > 0)].reset_index(drop=True)
    base = att.groupby(["team_id", "position", "zone"], sort=True)[[*DIST_COLS, "dt"]].sum()
    b = base.reindex(pd.MultiIndex.from_frame(att[["team_id", "position", "zone"]]))
    dt = att["dt"].to_numpy(float)
    bdt = b["dt"].to_numpy(float)
    for c, phi, pct in zip(DIST_COLS, PHI_COLS, PCT_COLS):
        att[phi] = att[c].to_numpy(float) / dt
        bphi = b[c].to_numpy(float) / bdt
        with np.errstate(divide="ignore", invalid="ignore"):
            att[pct] = np.where(bphi != 0, 100.0 * (att[phi] - bphi) / bphi, np.nan)
    att = att.rename(columns={c: "sum_" + c for c in DIST_COLS}).rename(columns={"dt": "sum_dt"})
    return att[["team_id", "player_id", "position", "zone", *PHI_COLS, *PCT_COLS,
                *("sum_" + c for c in DIST_COLS), "sum_dt", "n_credits"]]


def player_table(indiv: pd.DataFrame, toi_table: pd.DataFrame, min_toi: float = 200.0,
                 sort_by: str = "OZ_pct_t") -> pd.DataFrame:
    """Wide per-player table: team, player, position, 5v5 minutes and the
    adjusted percentage of each component in each zone."""
    wide = indiv.pivot_table(index=["team_id", "player_id", "position"], columns="zone",
                             values=list(PCT_COLS), aggfunc="first", observed=True)
    wide.columns = [f"{z}_{c}" for c, z in wide.columns]
    order = [f"{z}_{c}" for z in _ZONES for c in PCT_COLS]
    wide = wide.reindex(columns=order).reset_index()
    out = wide.merge(toi_table, on=["team_id", "player_id"], how="left")
    out["toi_min"] = out["toi_min"].fillna(0.0)
    out = out[out["toi_min"] >= min_toi]
    out = out[["team_id", "player_id", "position", "toi_min", *order]]
    if sort_by in out:
        out = out.sort_values([sort_by, "player_id"], ascending=[False, True], kind="stable", na_position="last")
    return out.reset_index(drop=True)


@dataclass
class WowyResult:
    player_id: str
    table: pd.DataFrame  # per zone
    sequences: pd.DataFrame  # per candidate zonal sequence with its class

    @property
    def partition(self) -> Dict[str, int]:
        c = self.sequences["split"].value_counts()
        return {k: int(c.get(k, 0)) for k in ("with", "without", "excluded")}


def wowy(tab: SequenceTable, shifts: pd.DataFrame, player: str, manpower: Optional[Tuple[int, int]] = (5, 5),
         weighting: str = "sequence") -> WowyResult:
    """With/without split of the player's team's attacking pace per zone.

    ``weighting="sequence"`` averages per-sequence speeds (each sequence counts
    once); ``"time"`` pools distance and time across the split instead.
    """
    if weighting not in ("sequence", "time"):
        raise ValueError("weighting must be 'sequence' or 'time'")
    ps = shifts[shifts["player_id"].astype(str) == player]
    if not len(ps):
        raise AnalysisError(f"player {player!r} has no shifts")
    team_of_game = ps.groupby("game_id", sort=True)["team_id"].first()

    z = tab.zonal
    zg = z["game_id"].astype(str).to_numpy(dtype=object)
    zt = z["team_id"].astype(str).to_numpy(dtype=object)
    expected_team = team_of_game.reindex(zg).to_numpy(dtype=object)
    cand = zt == expected_team
    if manpower is not None:
        cand &= (z["own"].to_numpy() == manpower[0]) & (z["opp"].to_numpy() == manpower[1])
    cand_idx = np.flatnonzero(cand)

    # on-ice state at every event of every candidate zonal sequence
    zidx, pos = tab.zonal_event_positions()
    keep = cand[zidx]
    zidx, pos = zidx[keep], pos[keep]
    rows = tab.poss_rows[pos]
    f = tab.log.frame
    ev = pd.DataFrame({
        "z": zidx,
        "game_id": f["game_id"].astype(str).to_numpy(dtype=object)[rows],
        "period": f["period"].to_numpy()[rows],
        "t": f["t_s"].to_numpy()[rows],
    })
    on = _on_ice(ev, ps)
    n_ev = np.bincount(zidx, minlength=len(z))
    n_on = np.bincount(zidx, weights=on.astype(float), minlength=len(z))
    split = np.where(n_on == n_ev, "with", np.where(n_on == 0, "without", "excluded"))

    seqs = pd.DataFrame({
        "zseq": cand_idx,
        "sequence_id": z["sequence_id"].to_numpy(dtype=object)[cand_idx],
        "game_id": zg[cand_idx],
        "zone": z["zone"].astype(str).to_numpy(dtype=object)[cand_idx],
        "split": split[cand_idx],
    })
    s = tab.samples
    sums = s.groupby("zseq", sort=True)[[*DIST_COLS, "dt"]].sum()
    seqs = seqs.join(sums, on="zseq")
    seqs[[*DIST_COLS, "dt"]] = seqs[[*DIST_COLS, "dt"]].fillna(0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        for c, phi in zip(DIST_COLS, PHI_COLS):
            seqs[phi] = np.where(seqs["dt"] > 0, seqs[c] / seqs["dt"].where(seqs["dt"] > 0, 1.0), np.nan)

    rows_out = []
    for zone in _ZONES:
        rec = {"zone": zone}
        zs = seqs[seqs["zone"] == zone]
        vals = {}
        for sp in ("with", "without"):
            part = zs[zs["split"] == sp]
            speedy = part[part["dt"] > 0]
            rec[f"n_{sp}"] = len(part)
            rec[f"n_{sp}_timed"] = len(speedy)
            for c, phi in zip(DIST_COLS, PHI_COLS):
                if not len(speedy):
                    v = np.nan
                elif weighting == "sequence":
                    v = float(speedy[phi].mean())
                else:
                    v = float(speedy[c].sum() / speedy["dt"].sum())
                vals[(sp, phi)] = v
                rec[f"{sp}_{phi}"] = v
        rec["n_excluded"] = int((zs["split"] == "excluded").sum())
        for phi, pct in zip(PHI_COLS, PCT_COLS):
            w, wo = vals[("with", phi)], vals[("without", phi)]
            rec[pct] = 100.0 * (w - wo) / wo if np.isfinite(w) and np.isfinite(wo) and wo != 0 else np.nan
        rows_out.append(rec)
    table = pd.DataFrame(rows_out)
    table.insert(0, "player_id", player)
    return WowyResult(player, table, seqs.drop(columns=[*DIST_COLS, "dt"]))


def _on_ice(ev: pd.DataFrame, ps: pd.DataFrame) -> np.ndarray:
    """True where the player has a shift with start <= t < end."""
    out = np.zeros(len(ev), dtype=bool)
    if not len(ev):
        return out
    shifts = {k: (g["start_s"].to_numpy(), g["end_s"].to_numpy())
              for k, g in ps.sort_values("start_s", kind="stable").groupby(["game_id", "period"], sort=False)}
    for key, idx in ev.groupby(["game_id", "period"], sort=False).indices.items():
        sh = shifts.get(key)
        if sh is None:
            continue
        starts, ends = sh
        t = ev["t"].to_numpy()[idx]
        i = np.searchsorted(starts, t, side="right") - 1
        ok = i >= 0
        j = np.clip(i, 0, len(starts) - 1)
        out[idx] = ok & (t < ends[j])
    return out
