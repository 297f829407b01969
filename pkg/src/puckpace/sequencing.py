"""Possession sequences and pace samples.

Two entry points share one set of rules:

* :func:`sequence_table` is the columnar path used by every analysis.  It
  builds standard sequences, their zonal split and the pace-sample table in
  a handful of numpy passes.
* :func:`build_sequences`, :func:`pace_samples` and :func:`split_by_zone`
  work on :class:`PossessionSequence` objects one at a time and are handy for
  inspection and small logs.

Rules
-----
A possession event has a type in ``possession_types`` and
``team_id == possession_team``.  A standard sequence ends at a possession
event when the next possession event belongs to another team, carries a
different manpower, is separated from it by a stoppage-type event, or lives
in another period.  The transition into a sequence's final event is never
counted.  The zonal split cuts a sequence where consecutive events sit in
different zones; the earlier event seeds the next zonal sequence so the
crossing transition is credited to the destination zone.  The set of counted
transitions is therefore identical in both modes; only the zone tag differs.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from .events import STOPPAGE_TYPES, Event, EventLog
from .rink import ZONES, NormalizedPoint, RinkSpec, Zone, zone_codes, zone_of

DEFAULT_POSSESSION_TYPES: FrozenSet[str] = frozenset({"pass", "reception", "puck_recovery", "shot"})

REASONS = ("possession_change", "manpower_change", "stoppage", "zone_transition", "end_of_data")
R_POSSESSION, R_MANPOWER, R_STOPPAGE, R_ZONE, R_END = range(5)


@dataclass(frozen=True)
class PaceSample:
    d_total: float
    d_ew: float
    d_ns: float
    d_n: float
    dt: float
    from_event_id: str
    to_event_id: str
    from_player: Optional[str]
    to_player: Optional[str]
    start: NormalizedPoint
    end: NormalizedPoint


@dataclass
class PossessionSequence:
    sequence_id: str
    game_id: str
    team_id: str
    events: List[Event]
    termination_reason: str
    manpower: Tuple[int, int]
    zone: Optional[Zone] = None
    # True when ``events[0]`` seeds a zonal sequence from the previous zone
    seeded: bool = False
    # set on zonal pieces: whether the piece ends where its parent ends
    parent_final: bool = True

    @property
    def event_ids(self) -> List[str]:
        return [e.event_id for e in self.events]


# ---------------------------------------------------------------------------
# scalar path


def transition(a: Event, b: Event) -> PaceSample:
    dx = b.point.x_north - a.point.x_north
    dy = b.point.y_east - a.point.y_east
    d_total = float(np.sqrt(dx * dx + dy * dy))
    return PaceSample(
        d_total=d_total,
        d_ew=abs(dy),
        d_ns=abs(dx),
        d_n=max(dx, 0.0),
        dt=b.t_s - a.t_s,
        from_event_id=a.event_id,
        to_event_id=b.event_id,
        from_player=a.player_id,
        to_player=b.player_id,
        start=a.point,
        end=b.point,
    )


def pace_samples(seq: PossessionSequence, diagnostics: Optional[Dict[str, int]] = None) -> List[PaceSample]:
    """Transitions between successive events of one sequence.

    The transition into the final event is dropped unless the sequence is a
    zonal piece closed by a zone transition.  Non-positive ``dt`` transitions
    are dropped and tallied under ``diagnostics["dropped_dt"]``.
    """
    ev = seq.events
    n = len(ev)
    keep_last = seq.termination_reason == "zone_transition" and not seq.parent_final
    stop = n - 1 if keep_last else n - 2
    out = []
    for k in range(max(stop, 0)):
        s = transition(ev[k], ev[k + 1])
        if s.dt <= 0:
            if diagnostics is not None:
                diagnostics["dropped_dt"] = diagnostics.get("dropped_dt", 0) + 1
            continue
        out.append(s)
    return out


def split_by_zone(seqs: Iterable[PossessionSequence], spec: RinkSpec) -> List[PossessionSequence]:
    out: List[PossessionSequence] = []
    for seq in seqs:
        zones = [zone_of(e.point, spec) for e in seq.events]
        pieces: List[Tuple[int, int]] = []  # (first own event, stop) in events
        start = 0
        for k in range(1, len(zones)):
            if zones[k] != zones[k - 1]:
                pieces.append((start, k))
                start = k
        pieces.append((start, len(zones)))
        for j, (a, b) in enumerate(pieces):
            last = j == len(pieces) - 1
            seeded = a > 0
            events = seq.events[a - 1 if seeded else a:b]
            out.append(
                PossessionSequence(
                    sequence_id=f"{seq.sequence_id}.{j}",
                    game_id=seq.game_id,
                    team_id=seq.team_id,
                    events=list(events),
                    termination_reason=seq.termination_reason if last else "zone_transition",
                    manpower=seq.manpower,
                    zone=zones[a],
                    seeded=seeded,
                    parent_final=last,
                )
            )
    return out


# ---------------------------------------------------------------------------
# columnar path


@dataclass
class SequenceTable:
    """Columnar sequences and samples for one event log.

    ``sequences`` has one row per standard sequence, ``zonal`` one row per
    zonal piece, and ``samples`` one row per counted transition with both its
    standard (``seq``) and zonal (``zseq``, ``zone``) membership.
    ``poss_rows`` lists the log rows of possession events in order; the
    per-position arrays ``seq_of``/``zseq_of``/``zone_of_pos`` align with it.
    """

    log: EventLog
    rink: RinkSpec
    possession_types: FrozenSet[str]
    poss_rows: np.ndarray
    seq_of: np.ndarray
    zseq_of: np.ndarray
    zone_of_pos: np.ndarray
    sequences: pd.DataFrame
    zonal: pd.DataFrame
    samples: pd.DataFrame
    diagnostics: Dict[str, int] = field(default_factory=dict)

    def filter_manpower(self, manpower: Optional[Tuple[int, int]]) -> pd.DataFrame:
        if manpower is None:
            return self.samples
        s = self.samples
        m = (s["own"].to_numpy() == manpower[0]) & (s["opp"].to_numpy() == manpower[1])
        return s[m]

    def zonal_event_positions(self) -> Tuple[np.ndarray, np.ndarray]:
        """(zonal sequence index, possession position) for every event of every
        zonal piece, seeds included."""
        z = self.zonal
        first = z["first_pos"].to_numpy()
        stop = z["stop_pos"].to_numpy()
        seeded = z["seeded"].to_numpy()
        lo = first - seeded.astype(np.int64)
        lengths = stop - lo
        zidx = np.repeat(np.arange(len(z)), lengths)
        offs = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        return zidx, np.repeat(lo, lengths) + offs


def _empty_table(log, rink, types) -> SequenceTable:
    seqs = pd.DataFrame({c: [] for c in _SEQ_COLS})
    zon = pd.DataFrame({c: [] for c in _ZSEQ_COLS})
    samp = pd.DataFrame({c: [] for c in _SAMPLE_COLS})
    return SequenceTable(log, rink, types, np.zeros(0, np.int64), np.zeros(0, np.int64),
                         np.zeros(0, np.int64), np.zeros(0, np.int8), seqs, zon, samp, {"dropped_dt": 0})


_SEQ_COLS = ["sequence_id", "game_id", "league", "season", "period", "team_id", "opponent", "own", "opp",
             "manpower", "reason", "first_pos", "stop_pos", "n_events", "t_start", "t_end"]
_ZSEQ_COLS = ["sequence_id", "parent", "game_id", "league", "season", "period", "team_id", "opponent", "own",
              "opp", "manpower", "zone", "reason", "first_pos", "stop_pos", "seeded", "parent_final"]
_SAMPLE_COLS = ["from_row", "to_row", "seq", "zseq", "zone", "game_id", "league", "season", "period", "team_id",
                "opponent", "own", "opp", "manpower", "from_player", "to_player", "d_total", "d_ew", "d_ns",
                "d_n", "dt", "x0", "y0", "x1", "y1", "t0", "t1"]


def _codes(series: pd.Series) -> np.ndarray:
    if isinstance(series.dtype, pd.CategoricalDtype):
        return series.cat.codes.to_numpy()
    return pd.factorize(series)[0]


def _sequence_table_one(log: EventLog, rink: RinkSpec, types: FrozenSet[str]) -> SequenceTable:
    f = log.frame
    n = len(f)
    if n == 0:
        return _empty_table(log, rink, types)
    et = f["event_type"].astype(str).to_numpy(dtype=object) if not isinstance(
        f["event_type"].dtype, pd.CategoricalDtype) else None
    if et is None:
        cats = np.asarray(f["event_type"].cat.categories, dtype=object)
        ecode = f["event_type"].cat.codes.to_numpy()
        poss_type = np.isin(cats, list(types))[ecode] & (ecode >= 0)
        stop_type = np.isin(cats, list(STOPPAGE_TYPES))[ecode] & (ecode >= 0)
    else:
        poss_type = np.isin(et, list(types))
        stop_type = np.isin(et, list(STOPPAGE_TYPES))
    team = f["team_id"].astype(str).to_numpy(dtype=object)
    pteam = f["possession_team"].astype(object).to_numpy(dtype=object)
    is_poss = poss_type & (pteam == team)
    P = np.flatnonzero(is_poss)
    if len(P) == 0:
        t = _empty_table(log, rink, types)
        return t

    game_c = _codes(f["game_id"])
    period = f["period"].to_numpy()
    team_c = _codes(f["team_id"])
    own = f["own_skaters"].to_numpy().astype(np.int64)
    opp = f["opp_skaters"].to_numpy().astype(np.int64)
    cum_stop = np.cumsum(stop_type)
    t_s = f["t_s"].to_numpy()
    x = f["x"].to_numpy()
    y = f["y"].to_numpy()

    # last row of each (game, period) block
    gp_change = np.r_[(game_c[1:] != game_c[:-1]) | (period[1:] != period[:-1]), True]
    block_end = np.flatnonzero(gp_change)
    block_of_row = np.searchsorted(block_end, np.arange(n), side="left")
    end_row_of = block_end[block_of_row]
    game_end = np.r_[game_c[1:] != game_c[:-1], True]

    a, b = P[:-1], P[1:]
    new_block = (game_c[a] != game_c[b]) | (period[a] != period[b])
    stop_between = cum_stop[b] - cum_stop[a] > 0
    team_change = team_c[a] != team_c[b]
    mp_change = (own[a] != own[b]) | (opp[a] != opp[b])
    boundary = new_block | stop_between | team_change | mp_change

    # reason a sequence ends at each position (read only at sequence ends)
    explicit_stop_tail = cum_stop[end_row_of[P]] - cum_stop[P] > 0
    reason_after = np.where(explicit_stop_tail, R_STOPPAGE,
                            np.where(game_end[end_row_of[P]], R_END, R_STOPPAGE)).astype(np.int8)
    inner = ~new_block
    r = np.where(stop_between, R_STOPPAGE,
                 np.where(team_change, R_POSSESSION, R_MANPOWER)).astype(np.int8)
    reason_after[:-1][inner] = r[inner]

    starts_flag = np.r_[True, boundary]
    seq_of = np.cumsum(starts_flag) - 1
    seq_first = np.flatnonzero(starts_flag)
    seq_stop = np.r_[seq_first[1:], len(P)]
    seq_last = seq_stop - 1

    zpos = zone_codes(x[P], rink)
    zchange = np.r_[False, (zpos[1:] != zpos[:-1]) & ~boundary]
    zstart_flag = starts_flag | zchange
    zseq_of = np.cumsum(zstart_flag) - 1
    z_first = np.flatnonzero(zstart_flag)
    z_stop = np.r_[z_first[1:], len(P)]
    z_parent = seq_of[z_first]
    z_seeded = zchange[z_first]
    z_parent_final = seq_last[z_parent] == z_stop - 1
    z_reason = np.where(z_parent_final, reason_after[z_stop - 1], R_ZONE).astype(np.int8)

    # counted transitions: consecutive positions of one sequence, not into its final event
    k = np.arange(len(P) - 1)
    is_last = np.zeros(len(P), dtype=bool)
    is_last[seq_last] = True
    pair = (~boundary) & (~is_last[k + 1])
    k = k[pair]
    fr, to = P[k], P[k + 1]
    dx = x[to] - x[fr]
    dy = y[to] - y[fr]
    dt = t_s[to] - t_s[fr]
    good = dt > 0
    dropped = int((~good).sum())
    k, fr, to, dx, dy, dt = k[good], fr[good], to[good], dx[good], dy[good], dt[good]

    game = f["game_id"]
    league = f["league"]
    season = f["season"]
    player = f["player_id"].astype(object).to_numpy(dtype=object)
    opponent = f["opponent"].astype(object).to_numpy(dtype=object)

    def _mp(o, p):
        code = np.asarray(o, np.int64) * 16 + np.asarray(p, np.int64)
        uniq, inv = np.unique(code, return_inverse=True)
        return pd.Categorical.from_codes(inv, [f"{c // 16}v{c % 16}" for c in uniq])

    # game ordinal of each sequence for readable ids
    sg = game_c[P[seq_first]]
    seq_ord = np.arange(len(seq_first)) - np.searchsorted(sg, sg, side="left")
    game_names = game.astype(str).to_numpy(dtype=object)
    seq_ids = np.array([f"{g}/{i}" for g, i in zip(game_names[P[seq_first]], seq_ord)], dtype=object)
    z_ord = np.arange(len(z_first)) - np.searchsorted(z_parent, z_parent, side="left")
    zseq_ids = np.array([f"{seq_ids[p]}.{j}" for p, j in zip(z_parent, z_ord)], dtype=object)

    rows_first = P[seq_first]
    sequences = pd.DataFrame({
        "sequence_id": seq_ids,
        "game_id": game.iloc[rows_first].to_numpy(),
        "league": league.iloc[rows_first].to_numpy(),
        "season": season.iloc[rows_first].to_numpy(),
        "period": period[rows_first],
        "team_id": team[rows_first],
        "opponent": opponent[rows_first],
        "own": own[rows_first],
        "opp": opp[rows_first],
        "manpower": _mp(own[rows_first], opp[rows_first]),
        "reason": pd.Categorical.from_codes(reason_after[seq_last], REASONS),
        "first_pos": seq_first,
        "stop_pos": seq_stop,
        "n_events": seq_stop - seq_first,
        "t_start": t_s[rows_first],
        "t_end": t_s[P[seq_last]],
    })
    zrows = P[z_first]
    zonal = pd.DataFrame({
        "sequence_id": zseq_ids,
        "parent": z_parent,
        "game_id": game.iloc[zrows].to_numpy(),
        "league": league.iloc[zrows].to_numpy(),
        "season": season.iloc[zrows].to_numpy(),
        "period": period[zrows],
        "team_id": team[zrows],
        "opponent": opponent[zrows],
        "own": own[zrows],
        "opp": opp[zrows],
        "manpower": _mp(own[zrows], opp[zrows]),
        "zone": pd.Categorical.from_codes(zpos[z_first], [z.value for z in ZONES]),
        "reason": pd.Categorical.from_codes(z_reason, REASONS),
        "first_pos": z_first,
        "stop_pos": z_stop,
        "seeded": z_seeded,
        "parent_final": z_parent_final,
    })
    zone_to = zpos[k + 1]
    samples = pd.DataFrame({
        "from_row": fr,
        "to_row": to,
        "seq": seq_of[k],
        "zseq": zseq_of[k + 1],
        "zone": pd.Categorical.from_codes(zone_to, [z.value for z in ZONES]),
        "game_id": game.iloc[fr].to_numpy(),
        "league": league.iloc[fr].to_numpy(),
        "season": season.iloc[fr].to_numpy(),
        "period": period[fr],
        "team_id": pd.Categorical(team[fr]),
        "opponent": pd.Categorical(opponent[fr]),
        "own": own[fr],
        "opp": opp[fr],
        "manpower": _mp(own[fr], opp[fr]),
        "from_player": player[fr],
        "to_player": player[to],
        "d_total": np.sqrt(dx * dx + dy * dy),
        "d_ew": np.abs(dy),
        "d_ns": np.abs(dx),
        "d_n": np.maximum(dx, 0.0),
        "dt": dt,
        "x0": x[fr],
        "y0": y[fr],
        "x1": x[to],
        "y1": y[to],
        "t0": t_s[fr],
        "t1": t_s[to],
    })
    return SequenceTable(log, rink, types, P, seq_of, zseq_of, zpos, sequences, zonal, samples,
                         {"dropped_dt": dropped})


def _shift(tab: SequenceTable, row_off: int, pos_off: int, seq_off: int, zseq_off: int) -> SequenceTable:
    s = tab.sequences.copy()
    s["first_pos"] += pos_off
    s["stop_pos"] += pos_off
    z = tab.zonal.copy()
    z["parent"] += seq_off
    z["first_pos"] += pos_off
    z["stop_pos"] += pos_off
    sm = tab.samples.copy()
    sm["from_row"] += row_off
    sm["to_row"] += row_off
    sm["seq"] += seq_off
    sm["zseq"] += zseq_off
    return replace(tab, poss_rows=tab.poss_rows + row_off, seq_of=tab.seq_of + seq_off,
                   zseq_of=tab.zseq_of + zseq_off, sequences=s, zonal=z, samples=sm)


def _concat_frames(frames: List[pd.DataFrame]) -> pd.DataFrame:
    frames = [f for f in frames if len(f)] or frames[:1]
    out = pd.concat(frames, ignore_index=True)
    # restore categoricals whose shards had different category sets
    for c, dtype in frames[0].dtypes.items():
        if isinstance(dtype, pd.CategoricalDtype) and not isinstance(out[c].dtype, pd.CategoricalDtype):
            out[c] = out[c].astype("category")
    return out


def sequence_table(log: EventLog, rink: Optional[RinkSpec] = None,
                   possession_types: Iterable[str] = DEFAULT_POSSESSION_TYPES,
                   workers: int = 1) -> SequenceTable:
    """Build sequences, zonal pieces and samples for ``log``.

    With ``workers > 1`` games are split into contiguous shards processed on
    a thread pool; shards are concatenated in game order so the result is
    identical to the single-worker run.
    """
    rink = rink or log.rink
    types = frozenset(possession_types)
    games = log.games
    if workers <= 1 or len(games) < 2:
        return _sequence_table_one(log, rink, types)
    shards = np.array_split(np.arange(len(games)), min(workers, len(games)))
    bounds = []
    for sh in shards:
        if len(sh) == 0:
            continue
        s = log.game_slice(games[sh[0]]).start
        e = log.game_slice(games[sh[-1]]).stop
        bounds.append((s, e))

    def run(se):
        s, e = se
        sub = EventLog(log.frame.iloc[s:e], rink)
        return _sequence_table_one(sub, rink, types)

    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(run, bounds))
    shifted = []
    pos_off = seq_off = zseq_off = 0
    for (s, _e), part in zip(bounds, parts):
        shifted.append(_shift(part, s, pos_off, seq_off, zseq_off))
        pos_off += len(part.poss_rows)
        seq_off += len(part.sequences)
        zseq_off += len(part.zonal)
    return SequenceTable(
        log=log,
        rink=rink,
        possession_types=types,
        poss_rows=np.concatenate([p.poss_rows for p in shifted]),
        seq_of=np.concatenate([p.seq_of for p in shifted]),
        zseq_of=np.concatenate([p.zseq_of for p in shifted]),
        zone_of_pos=np.concatenate([p.zone_of_pos for p in shifted]),
        sequences=_concat_frames([p.sequences for p in shifted]),
        zonal=_concat_frames([p.zonal for p in shifted]),
        samples=_concat_frames([p.samples for p in shifted]),
        diagnostics={"dropped_dt": sum(p.diagnostics["dropped_dt"] for p in shifted)},
    )


def build_sequences(log: EventLog, possession_event_types: Iterable[str] = DEFAULT_POSSESSION_TYPES
                    ) -> List[PossessionSequence]:
    """Standard-termination sequences as objects (use :func:`sequence_table`
    for large logs)."""
    tab = sequence_table(log, log.rink, possession_event_types)
    return _materialize(tab)


def _materialize(tab: SequenceTable) -> List[PossessionSequence]:
    out = []
    for row in tab.sequences.itertuples(index=False):
        rows = tab.poss_rows[row.first_pos:row.stop_pos]
        out.append(PossessionSequence(
            sequence_id=row.sequence_id,
            game_id=str(row.game_id),
            team_id=str(row.team_id),
            events=[tab.log.event(int(i)) for i in rows],
            termination_reason=str(row.reason),
            manpower=(int(row.own), int(row.opp)),
        ))
    return out


def sequences_jsonl(tab: SequenceTable, zonal: bool = False) -> str:
    """Debug export: one JSON object per sequence (id, event ids, reason)."""
    eid = tab.log.frame["event_id"].to_numpy(dtype=object)
    df = tab.zonal if zonal else tab.sequences
    lines = []
    for row in df.itertuples(index=False):
        lo = row.first_pos - (1 if zonal and row.seeded else 0)
        ids = [eid[i] for i in tab.poss_rows[lo:row.stop_pos]]
        obj = {"sequence_id": row.sequence_id, "event_ids": ids, "reason": str(row.reason)}
        if zonal:
            obj["zone"] = str(row.zone)
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")
