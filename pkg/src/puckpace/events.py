"""Event, shift and manpower ingestion.

Events arrive as CSV or JSON-lines with the flat schema in ``EVENT_COLUMNS``.
Coordinates in files are centre-origin rink coordinates; they are flipped into
the attacking frame with a per (game, team, period) attack sign on load and
flipped back on serialisation, so a parse/serialise/parse cycle is exact.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.compute as pc
import pyarrow.csv as pacsv

from .errors import IngestError
from .rink import NHL, NormalizedPoint, RinkSpec, contains_many

EVENT_TYPES = (
    "pass",
    "reception",
    "failed_reception",
    "puck_recovery",
    "carry",
    "shot",
    "block",
    "save",
    "faceoff",
    "stoppage",
    "zone_entry",
    "zone_exit",
    "penalty",
)
PASS_TYPES = ("d2d", "stretch", "slot", "outlet", "ew", "rim", "other")
STOPPAGE_TYPES = frozenset({"stoppage", "faceoff", "penalty"})

EVENT_COLUMNS = [
    "event_id",
    "game_id",
    "league",
    "season",
    "period",
    "t_s",
    "team_id",
    "player_id",
    "event_type",
    "x",
    "y",
    "possession_team",
    "own_skaters",
    "opp_skaters",
    "deflected",
    "on_goal",
    "goal",
    "distance_ft",
    "controlled",
    "attackers",
    "defenders",
    "pass_type",
    "linked_reception_id",
]
REQUIRED_COLUMNS = (
    "event_id", "game_id", "league", "season", "period", "t_s", "team_id",
    "event_type", "x", "y", "own_skaters", "opp_skaters",
)
# attribute columns and the event type that owns them
ATTR_OWNER = {
    "deflected": ("shot",),
    "on_goal": ("shot",),
    "goal": ("shot",),
    "distance_ft": ("shot",),
    "controlled": ("zone_entry", "zone_exit"),
    "attackers": ("zone_entry",),
    "defenders": ("zone_entry",),
    "pass_type": ("pass",),
    "linked_reception_id": ("pass",),
}
REQUIRED_ATTRS = {
    "shot": ("deflected", "on_goal", "goal"),
    "zone_entry": ("controlled", "attackers", "defenders"),
    "zone_exit": ("controlled",),
    "pass": ("pass_type",),
}
BOOL_COLUMNS = ("deflected", "on_goal", "goal", "controlled")

ATTACK_COLUMNS = ["game_id", "team_id", "period", "attack_sign"]
SHIFT_COLUMNS = ["game_id", "player_id", "team_id", "position", "period", "start_s", "end_s"]
MANPOWER_COLUMNS = [
    "game_id", "period", "start_s", "end_s",
    "home_team_id", "away_team_id", "home_skaters", "away_skaters",
]

_TRUE = {"true", "1", "True", "TRUE"}
_FALSE = {"false", "0", "False", "FALSE"}

AttackTable = Dict[Tuple[str, str, int], int]


@dataclass(frozen=True)
class Event:
    event_id: str
    game_id: str
    league: str
    season: str
    period: int
    t_s: float
    team_id: str
    player_id: Optional[str]
    event_type: str
    point: NormalizedPoint
    possession_team: Optional[str]
    manpower: Tuple[int, int]
    attrs: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Shift:
    game_id: str
    player_id: str
    team_id: str
    position: str
    period: int
    start_s: float
    end_s: float


@dataclass(frozen=True)
class ManpowerInterval:
    game_id: str
    period: int
    start_s: float
    end_s: float
    home_skaters: int
    away_skaters: int
    home_team_id: str = ""
    away_team_id: str = ""


# ---------------------------------------------------------------------------
# low-level text handling


def _read_text(stream) -> str:
    if isinstance(stream, (bytes, bytearray)):
        return stream.decode("utf-8")
    if isinstance(stream, str):
        return stream
    data = stream.read()
    return data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data


def _find_bad_csv_line(text: str, n_cols: int) -> Tuple[int, int]:
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if row and len(row) != n_cols:
            return lineno, len(row)
    return -1, -1


STR = pd.StringDtype("pyarrow")
_CATEGORY_COLUMNS = ("game_id", "league", "season", "team_id", "possession_team", "event_type",
                     "pass_type", "player_id")


def _read_csv_strings(text: str, columns: Sequence[str], what: str) -> pd.DataFrame:
    """Read a CSV whose header must contain ``columns``; every cell is a string."""
    if not text.strip():
        return pd.DataFrame({c: pd.Series([], dtype=STR) for c in columns})
    raw_header = next(csv.reader(io.StringIO(text.split("\n", 1)[0])))
    header = [h.strip() for h in raw_header]
    missing = [c for c in columns if c not in header]
    if missing:
        raise IngestError(f"{what} header is missing columns: {', '.join(missing)}", line=1)
    try:
        table = pacsv.read_csv(
            pa.BufferReader(text.encode("utf-8")),
            convert_options=pacsv.ConvertOptions(
                column_types={h: pa.string() for h in raw_header},
                strings_can_be_null=False,
                quoted_strings_can_be_null=False,
            ),
        )
    except pa.ArrowInvalid:
        lineno, got = _find_bad_csv_line(text, len(header))
        raise IngestError(f"malformed {what} record: expected {len(header)} fields, got {got}", line=lineno) from None
    df = table.to_pandas(types_mapper={pa.string(): STR}.get)
    df.columns = header
    return df


def _json_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _read_jsonl_strings(text: str, columns: Sequence[str], what: str) -> pd.DataFrame:
    cols: Dict[str, List[str]] = {c: [] for c in columns}
    lines: List[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise IngestError(f"malformed {what} record: {exc.msg}", line=lineno) from None
        if not isinstance(obj, dict):
            raise IngestError(f"malformed {what} record: expected a JSON object", line=lineno)
        for c in columns:
            cols[c].append(_json_cell(obj.get(c)))
        lines.append(lineno)
    df = pd.DataFrame({c: pd.Series(v, dtype=STR) for c, v in cols.items()})
    df["_line"] = np.asarray(lines, dtype=np.int64)
    return df


def _table_strings(stream, fmt: str, columns: Sequence[str], what: str) -> pd.DataFrame:
    text = _read_text(stream)
    if fmt in ("csv",):
        df = _read_csv_strings(text, columns, what)
        df["_line"] = np.arange(2, len(df) + 2, dtype=np.int64)
        return df
    if fmt in ("jsonl", "json-lines", "json", "ndjson"):
        return _read_jsonl_strings(text, columns, what)
    raise IngestError(f"unknown input format {fmt!r}")


def _float_or_nan(v: str) -> float:
    try:
        return float(v)
    except ValueError:
        return float("nan")


def _numeric(df: pd.DataFrame, col: str, *, required: bool, integer: bool = False,
             id_col: Optional[str] = None) -> pd.Series:
    raw = df[col]
    if raw.dtype != STR:
        raw = raw.astype(STR)
    empty = (raw == "").to_numpy(bool)
    try:
        # arrow's parser is correctly rounded; pandas' fast path can be one
        # ulp off, which breaks exact round trips
        arr = pa.chunked_array(pa.array(raw.array))
        arr = pc.if_else(pc.equal(arr, ""), pa.scalar(None, pa.string()), arr)
        vals = pd.Series(pc.cast(arr, pa.float64()).to_numpy(zero_copy_only=False), index=raw.index)
    except (pa.ArrowInvalid, pa.ArrowNotImplementedError):
        vals = pd.Series([_float_or_nan(v) for v in raw.to_numpy(dtype=object)], index=raw.index, dtype=float)
    bad = vals.isna() & ~empty
    if required:
        bad |= empty
    if integer:
        bad |= vals.notna() & (vals != np.floor(vals))
    bad |= vals.notna() & ~np.isfinite(vals)
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        eid = df[id_col].iat[i] if id_col else None
        what = "missing" if raw.iat[i] == "" else f"not a valid number ({raw.iat[i]!r})"
        raise IngestError(what, line=int(df["_line"].iat[i]), event_id=eid, field=col)
    return vals


def _bools(df: pd.DataFrame, col: str, id_col: str) -> pd.Series:
    raw = df[col]
    out = pd.Series(pd.NA, index=df.index, dtype="boolean")
    t = raw.isin(_TRUE)
    f = raw.isin(_FALSE)
    bad = ~(t | f | (raw == ""))
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise IngestError(f"not a boolean ({raw.iat[i]!r})", line=int(df["_line"].iat[i]),
                          event_id=df[id_col].iat[i], field=col)
    out[t.to_numpy()] = True
    out[f.to_numpy()] = False
    return out


def _fail_at(df: pd.DataFrame, mask, message: str, field_name: Optional[str] = None, id_col="event_id"):
    mask = np.asarray(mask)
    if mask.any():
        i = int(np.flatnonzero(mask)[0])
        eid = df[id_col].iat[i] if id_col in df else None
        raise IngestError(message, line=int(df["_line"].iat[i]), event_id=eid, field=field_name)


# ---------------------------------------------------------------------------
# attack table


def parse_attack_table(stream, fmt: str = "csv") -> AttackTable:
    df = _table_strings(stream, fmt, ATTACK_COLUMNS, "attack-table")
    period = _numeric(df, "period", required=True, integer=True)
    sign = _numeric(df, "attack_sign", required=True, integer=True)
    _fail_at(df, ~sign.isin([1, -1]), "attack_sign must be +1 or -1", "attack_sign", id_col="game_id")
    return {
        (g, t, int(p)): int(s)
        for g, t, p, s in zip(df["game_id"], df["team_id"], period, sign)
    }


def write_attack_table(table: AttackTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ATTACK_COLUMNS)
    for (g, t, p), s in sorted(table.items()):
        w.writerow([g, t, p, s])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# event log


class EventLog:
    """Immutable, columnar event log in the attacking frame.

    ``frame`` is sorted by (game_id, period) with file order preserved inside
    each period.  Columns follow ``EVENT_COLUMNS`` with ``x``/``y`` holding the
    normalised ``x_north``/``y_east``; ``attack_sign``, ``opponent`` and
    ``line`` (source line number) are added.
    """

    def __init__(self, frame: pd.DataFrame, rink: RinkSpec = NHL):
        self.frame = frame
        self.rink = rink
        g = frame["game_id"].to_numpy(dtype=object)
        self._game_bounds: Dict[str, Tuple[int, int]] = {}
        if len(g):
            starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
            stops = np.r_[starts[1:], len(g)]
            for s, e in zip(starts, stops):
                self._game_bounds[g[s]] = (int(s), int(e))

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def games(self) -> List[str]:
        return list(self._game_bounds)

    def game_slice(self, game_id: str) -> slice:
        s, e = self._game_bounds[game_id]
        return slice(s, e)

    def for_game(self, game_id: str) -> pd.DataFrame:
        return self.frame.iloc[self.game_slice(game_id)]

    def window(self, game_id: str, period: int, t0: float, t1: float) -> pd.DataFrame:
        """Events of one period with t0 <= t_s <= t1."""
        g = self.for_game(game_id)
        g = g[g["period"].to_numpy() == period]
        t = g["t_s"].to_numpy()
        lo = np.searchsorted(t, t0, side="left")
        hi = np.searchsorted(t, t1, side="right")
        return g.iloc[lo:hi]

    def teams(self, game_id: str) -> Tuple[str, ...]:
        g = self.for_game(game_id)
        return tuple(sorted(set(g["team_id"].astype(str))))

    def type_counts(self) -> Dict[str, int]:
        vc = self.frame["event_type"].astype(str).value_counts()
        return {k: int(v) for k, v in sorted(vc.items())}

    def event(self, i: int) -> Event:
        return _row_event(self.frame, i)

    def events(self) -> Iterator[Event]:
        for i in range(len(self.frame)):
            yield _row_event(self.frame, i)

    def index_of(self, event_id: str) -> int:
        if not hasattr(self, "_id_index"):
            self._id_index = {e: i for i, e in enumerate(self.frame["event_id"].to_numpy())}
        return self._id_index[event_id]

    @classmethod
    def concat(cls, logs: Sequence["EventLog"]) -> "EventLog":
        if not logs:
            return empty_log()
        frame = pd.concat([lg.frame for lg in logs], ignore_index=True)
        frame = _finish_frame(frame)
        return cls(frame, logs[0].rink)


def _na(v):
    return None if v is pd.NA or v is None or (isinstance(v, float) and np.isnan(v)) else v


def _row_event(frame: pd.DataFrame, i: int) -> Event:
    r = frame.iloc[i]
    et = str(r["event_type"])
    attrs = {}
    for col, owners in ATTR_OWNER.items():
        if et in owners:
            v = _na(r[col])
            if v is not None:
                if col in BOOL_COLUMNS:
                    v = bool(v)
                elif col in ("attackers", "defenders"):
                    v = int(v)
                elif col == "distance_ft":
                    v = float(v)
                else:
                    v = str(v)
            attrs[col] = v
    pid = _na(r["player_id"])
    pt = _na(r["possession_team"])
    return Event(
        event_id=str(r["event_id"]),
        game_id=str(r["game_id"]),
        league=str(r["league"]),
        season=str(r["season"]),
        period=int(r["period"]),
        t_s=float(r["t_s"]),
        team_id=str(r["team_id"]),
        player_id=None if pid is None else str(pid),
        event_type=et,
        point=NormalizedPoint(float(r["x"]), float(r["y"])),
        possession_team=None if pt is None else str(pt),
        manpower=(int(r["own_skaters"]), int(r["opp_skaters"])),
        attrs=attrs,
    )


def empty_log(rink: RinkSpec = NHL) -> EventLog:
    df = pd.DataFrame({c: pd.Series([], dtype=object) for c in EVENT_COLUMNS})
    df["_line"] = np.zeros(0, dtype=np.int64)
    return _build_frame(df, rink, {})


def _lex_codes(col: pd.Series) -> np.ndarray:
    """Integer codes that sort like the column's string values."""
    if isinstance(col.dtype, pd.CategoricalDtype) and col.cat.categories.is_monotonic_increasing:
        return col.cat.codes.to_numpy()
    return pd.factorize(col.astype(str), sort=True)[0]


def _categorical(col: pd.Series, empty_is_null: bool = False) -> pd.Categorical:
    """String column to a categorical with sorted categories.  Factorizing
    the arrow-backed strings avoids a detour through Python objects."""
    col = col.astype(STR)
    if empty_is_null:
        col = col.where(col != "")
    codes, uniques = pd.factorize(col.array, sort=True)
    return pd.Categorical.from_codes(codes, categories=pd.Index(np.asarray(uniques, dtype=object), dtype=object))


def _finish_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Sort by (game, period) keeping file order, add opponent column."""
    for c in _CATEGORY_COLUMNS:
        if not isinstance(frame[c].dtype, pd.CategoricalDtype):
            frame[c] = frame[c].astype("category")
    order = np.lexsort((np.arange(len(frame)), frame["period"].to_numpy(), _lex_codes(frame["game_id"])))
    frame = frame.iloc[order].reset_index(drop=True)
    gc, gu = pd.factorize(frame["game_id"])
    tc, tu = pd.factorize(frame["team_id"])
    nt = max(len(tu), 1)
    codes, inv = np.unique(gc.astype(np.int64) * nt + tc, return_inverse=True)
    teams_of: Dict[int, List[str]] = {}
    for c in codes:
        teams_of.setdefault(int(c // nt), []).append(str(tu[c % nt]))
    opp_map = {}
    for g, ts in teams_of.items():
        ts = sorted(ts)
        if len(ts) > 2:
            raise IngestError(f"game {gu[g]} has more than two teams: {', '.join(ts)}")
        if len(ts) == 2:
            opp_map[(g, ts[0])] = ts[1]
            opp_map[(g, ts[1])] = ts[0]
    opp = np.array([opp_map.get((int(c // nt), str(tu[c % nt]))) for c in codes], dtype=object)
    frame["opponent"] = pd.Categorical(opp[inv]) if len(frame) else pd.Categorical([])
    return frame


def _build_frame(df: pd.DataFrame, rink: RinkSpec, attack: AttackTable) -> EventLog:
    n = len(df)
    for c in REQUIRED_COLUMNS:
        if c not in ("period", "t_s", "x", "y", "own_skaters", "opp_skaters"):
            _fail_at(df, (df[c] == "").to_numpy(), "missing required value", c)
    dup = df["event_id"].duplicated().to_numpy()
    _fail_at(df, dup, "duplicate event_id", "event_id")

    et = df["event_type"]
    _fail_at(df, ~et.isin(EVENT_TYPES).to_numpy(), "unknown event_type", "event_type")

    period = _numeric(df, "period", required=True, integer=True, id_col="event_id")
    _fail_at(df, (period < 1).to_numpy(), "period must be >= 1", "period")
    t_s = _numeric(df, "t_s", required=True, id_col="event_id")
    _fail_at(df, (t_s < 0).to_numpy(), "t_s must be non-negative", "t_s")
    x = _numeric(df, "x", required=True, id_col="event_id").to_numpy(float)
    y = _numeric(df, "y", required=True, id_col="event_id").to_numpy(float)
    own = _numeric(df, "own_skaters", required=True, integer=True, id_col="event_id")
    opp = _numeric(df, "opp_skaters", required=True, integer=True, id_col="event_id")
    for name, s in (("own_skaters", own), ("opp_skaters", opp)):
        _fail_at(df, ((s < 3) | (s > 6)).to_numpy(), "manpower out of bounds 3..6", name)

    inside = contains_many(rink, x, y)
    _fail_at(df, ~inside, f"coordinate outside the {rink.name} rink", "x/y")

    # attribute columns only on their owning types
    for col, owners in ATTR_OWNER.items():
        stray = (df[col] != "") & ~et.isin(owners)
        _fail_at(df, stray.to_numpy(), "attribute not allowed on this event_type", col)
    pt = df["pass_type"]
    _fail_at(df, ((pt != "") & ~pt.isin(PASS_TYPES)).to_numpy(), "unknown pass_type", "pass_type")

    bools = {c: _bools(df, c, "event_id") for c in BOOL_COLUMNS}
    dist = _numeric(df, "distance_ft", required=False, id_col="event_id")
    att = _numeric(df, "attackers", required=False, integer=True, id_col="event_id")
    dfn = _numeric(df, "defenders", required=False, integer=True, id_col="event_id")
    for name, s in (("attackers", att), ("defenders", dfn)):
        _fail_at(df, ((s < 0) | (s > 5)).fillna(False).to_numpy(), "count out of bounds 0..5", name)

    # attacking-frame sign per (game, team, period)
    if n:
        key_df = pd.DataFrame({"game_id": df["game_id"].to_numpy(), "team_id": df["team_id"].to_numpy(),
                               "period": period.to_numpy(np.int64)})
        if attack:
            at = pd.DataFrame(
                [(g, t, p, s) for (g, t, p), s in attack.items()],
                columns=["game_id", "team_id", "period", "attack_sign"],
            )
            at["period"] = at["period"].astype(np.int64)
            merged = key_df.merge(at, on=["game_id", "team_id", "period"], how="left")
            sign = merged["attack_sign"].to_numpy()
        else:
            sign = np.full(n, np.nan)
        _fail_at(df, np.isnan(sign.astype(float)), "no attack direction for (game, team, period)", "attack_sign")
        sign = sign.astype(np.int8)
    else:
        sign = np.zeros(0, dtype=np.int8)

    def _opt_str(col):
        s = df[col].to_numpy(dtype=object).copy()
        s[s == ""] = None
        return s

    def _cat(col):
        return _categorical(df[col], empty_is_null=col in ("player_id", "possession_team", "pass_type"))

    frame = pd.DataFrame({
        "event_id": df["event_id"].to_numpy(dtype=object),
        "game_id": _cat("game_id"),
        "league": _cat("league"),
        "season": _cat("season"),
        "period": period.to_numpy(np.int64),
        "t_s": t_s.to_numpy(float),
        "team_id": _cat("team_id"),
        "player_id": _cat("player_id"),
        "event_type": _cat("event_type"),
        "x": sign * x,
        "y": sign * y,
        "possession_team": _cat("possession_team"),
        "own_skaters": own.to_numpy(np.int64).astype(np.int8),
        "opp_skaters": opp.to_numpy(np.int64).astype(np.int8),
        "deflected": bools["deflected"].array,
        "on_goal": bools["on_goal"].array,
        "goal": bools["goal"].array,
        "distance_ft": dist.to_numpy(float),
        "controlled": bools["controlled"].array,
        "attackers": att.astype("Int8").array,
        "defenders": dfn.astype("Int8").array,
        "pass_type": _cat("pass_type"),
        "linked_reception_id": _opt_str("linked_reception_id"),
        "attack_sign": sign,
        "line": df["_line"].to_numpy(np.int64),
    })
    return EventLog(_finish_frame(frame), rink)


def parse_events(stream, fmt: str = "csv", rink: RinkSpec = NHL,
                 attack_table: Optional[AttackTable] = None) -> EventLog:
    """Parse an event stream into an :class:`EventLog`.

    Raises :class:`IngestError` (carrying the source line) on malformed
    records, unknown event types, out-of-bounds manpower or coordinates
    outside the rink.
    """
    df = _table_strings(stream, fmt, EVENT_COLUMNS, "event")
    return _build_frame(df, rink, attack_table or {})


# ---------------------------------------------------------------------------
# serialisation


def _fmt(v) -> str:
    if v is None or v is pd.NA:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        if np.isnan(v):
            return ""
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _raw_columns(log: EventLog) -> Dict[str, List[str]]:
    f = log.frame
    sign = f["attack_sign"].to_numpy()
    out: Dict[str, List[str]] = {}
    for c in EVENT_COLUMNS:
        if c == "x":
            vals = sign * f["x"].to_numpy()
        elif c == "y":
            vals = sign * f["y"].to_numpy()
        else:
            vals = f[c].to_numpy(dtype=object)
        out[c] = [_fmt(v) for v in vals]
    return out


def serialize_events(log: EventLog, fmt: str = "csv") -> str:
    """Write raw (file-frame) coordinates back out in file order of the log."""
    cols = _raw_columns(log)
    n = len(log)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        w.writerows(zip(*(cols[c] for c in EVENT_COLUMNS)) if n else [])
        return buf.getvalue()
    lines = []
    numeric = {"period", "t_s", "x", "y", "own_skaters", "opp_skaters", "distance_ft", "attackers", "defenders"}
    for i in range(n):
        obj = {}
        for c in EVENT_COLUMNS:
            v = cols[c][i]
            if v == "":
                obj[c] = None
            elif c in BOOL_COLUMNS:
                obj[c] = v == "true"
            elif c in numeric:
                obj[c] = float(v) if c in ("t_s", "x", "y", "distance_ft") else int(v)
            else:
                obj[c] = v
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def attack_table_of(log: EventLog) -> AttackTable:
    f = log.frame
    keys = f[["game_id", "team_id", "period", "attack_sign"]].drop_duplicates()
    return {(str(g), str(t), int(p)): int(s) for g, t, p, s in keys.itertuples(index=False)}


# ---------------------------------------------------------------------------
# shifts and manpower


def parse_shifts(stream, fmt: str = "csv") -> pd.DataFrame:
    df = _table_strings(stream, fmt, SHIFT_COLUMNS, "shift")
    for c in ("game_id", "player_id", "team_id", "position"):
        _fail_at(df, (df[c] == "").to_numpy(), "missing required value", c, id_col="player_id")
    _fail_at(df, ~df["position"].isin(["F", "D", "G"]).to_numpy(), "position must be F, D or G", "position",
             id_col="player_id")
    period = _numeric(df, "period", required=True, integer=True)
    start = _numeric(df, "start_s", required=True)
    end = _numeric(df, "end_s", required=True)
    _fail_at(df, (start >= end).to_numpy(), "shift start_s must be < end_s", "start_s", id_col="player_id")
    out = pd.DataFrame({
        "game_id": df["game_id"].to_numpy(dtype=object),
        "player_id": df["player_id"].to_numpy(dtype=object),
        "team_id": df["team_id"].to_numpy(dtype=object),
        "position": df["position"].to_numpy(dtype=object),
        "period": period.to_numpy(np.int64),
        "start_s": start.to_numpy(float),
        "end_s": end.to_numpy(float),
    })
    out = out.sort_values(["game_id", "player_id", "period", "start_s"], kind="stable").reset_index(drop=True)
    same = (
        (out["game_id"].to_numpy()[1:] == out["game_id"].to_numpy()[:-1])
        & (out["player_id"].to_numpy()[1:] == out["player_id"].to_numpy()[:-1])
        & (out["period"].to_numpy()[1:] == out["period"].to_numpy()[:-1])
    )
    overlap = same & (out["start_s"].to_numpy()[1:] < out["end_s"].to_numpy()[:-1])
    if overlap.any():
        i = int(np.flatnonzero(overlap)[0]) + 1
        raise IngestError(
            f"overlapping shifts for player {out['player_id'].iat[i]} in game {out['game_id'].iat[i]}"
        )
    return out


def parse_manpower(stream, fmt: str = "csv") -> pd.DataFrame:
    df = _table_strings(stream, fmt, MANPOWER_COLUMNS, "manpower")
    period = _numeric(df, "period", required=True, integer=True)
    start = _numeric(df, "start_s", required=True)
    end = _numeric(df, "end_s", required=True)
    home = _numeric(df, "home_skaters", required=True, integer=True)
    away = _numeric(df, "away_skaters", required=True, integer=True)
    _fail_at(df, (start >= end).to_numpy(), "interval start_s must be < end_s", "start_s", id_col="game_id")
    for name, s in (("home_skaters", home), ("away_skaters", away)):
        _fail_at(df, ((s < 3) | (s > 6)).to_numpy(), "manpower out of bounds 3..6", name, id_col="game_id")
    out = pd.DataFrame({
        "game_id": df["game_id"].to_numpy(dtype=object),
        "period": period.to_numpy(np.int64),
        "start_s": start.to_numpy(float),
        "end_s": end.to_numpy(float),
        "home_team_id": df["home_team_id"].to_numpy(dtype=object),
        "away_team_id": df["away_team_id"].to_numpy(dtype=object),
        "home_skaters": home.to_numpy(np.int64),
        "away_skaters": away.to_numpy(np.int64),
    })
    out = out.sort_values(["game_id", "period", "start_s"], kind="stable").reset_index(drop=True)
    same = (out["game_id"].to_numpy()[1:] == out["game_id"].to_numpy()[:-1]) & (
        out["period"].to_numpy()[1:] == out["period"].to_numpy()[:-1]
    )
    gap = same & (out["start_s"].to_numpy()[1:] != out["end_s"].to_numpy()[:-1])
    if gap.any():
        i = int(np.flatnonzero(gap)[0]) + 1
        raise IngestError(
            f"manpower intervals of game {out['game_id'].iat[i]} period {out['period'].iat[i]} "
            f"overlap or leave a gap at t={out['start_s'].iat[i]}"
        )
    return out


def shifts_frame(shifts: Iterable[Shift]) -> pd.DataFrame:
    rows = [(s.game_id, s.player_id, s.team_id, s.position, s.period, s.start_s, s.end_s) for s in shifts]
    return pd.DataFrame(rows, columns=SHIFT_COLUMNS).astype(
        {"period": np.int64, "start_s": float, "end_s": float}
    )


def manpower_frame(intervals: Iterable[ManpowerInterval]) -> pd.DataFrame:
    rows = [
        (m.game_id, m.period, m.start_s, m.end_s, m.home_team_id, m.away_team_id, m.home_skaters, m.away_skaters)
        for m in intervals
    ]
    return pd.DataFrame(rows, columns=MANPOWER_COLUMNS).astype(
        {"period": np.int64, "start_s": float, "end_s": float, "home_skaters": np.int64, "away_skaters": np.int64}
    )


def write_table(df: pd.DataFrame, columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in df[list(columns)].itertuples(index=False):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Finding:
    game_id: str
    kind: str
    event_id: Optional[str]
    message: str


@dataclass
class ValidationReport:
    findings: List[Finding] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.findings)

    @property
    def is_clean(self) -> bool:
        return not self.findings

    def by_game(self) -> Dict[str, List[Finding]]:
        out: Dict[str, List[Finding]] = {}
        for f in self.findings:
            out.setdefault(f.game_id, []).append(f)
        return out

    def count(self, kind: str) -> int:
        return sum(1 for f in self.findings if f.kind == kind)


def covering_interval_index(manpower: pd.DataFrame, game: np.ndarray, period: np.ndarray,
                            t: np.ndarray) -> np.ndarray:
    """Row of the manpower interval covering each (game, period, t), -1 if none.

    Intervals are half-open [start, end) except that the last interval of a
    period also owns its end instant.
    """
    out = np.full(len(t), -1, dtype=np.int64)
    if not len(manpower) or not len(t):
        return out
    mp_key = manpower["game_id"].astype(str).to_numpy(dtype=object) + "\x00" + manpower["period"].astype(str).to_numpy(dtype=object)
    ev_key = np.asarray(game, dtype=object).astype(str).astype(object) + "\x00" + np.asarray(period).astype(str).astype(object)
    mp_starts = manpower["start_s"].to_numpy()
    mp_ends = manpower["end_s"].to_numpy()
    groups: Dict[str, np.ndarray] = {}
    for i, k in enumerate(mp_key):
        groups.setdefault(k, []).append(i)
    ev_groups = pd.Series(np.arange(len(t))).groupby(ev_key).indices
    for k, idx in ev_groups.items():
        rows = groups.get(k)
        if rows is None:
            continue
        rows = np.asarray(rows)
        starts = mp_starts[rows]
        pos = np.searchsorted(starts, t[idx], side="right") - 1
        ok = pos >= 0
        cand = rows[np.clip(pos, 0, len(rows) - 1)]
        last = pos == len(rows) - 1
        inside = ok & ((t[idx] < mp_ends[cand]) | (last & (t[idx] <= mp_ends[cand])))
        out[idx[inside]] = cand[inside]
    return out


def validate(log: EventLog, shifts: Optional[pd.DataFrame] = None,
             manpower_intervals: Optional[pd.DataFrame] = None) -> ValidationReport:
    """Collect data-quality findings; an empty report means the log is clean."""
    f = log.frame
    findings: List[Finding] = []
    if not len(f):
        return ValidationReport(findings)
    game = f["game_id"].astype(str).to_numpy(dtype=object)
    period = f["period"].to_numpy()
    t = f["t_s"].to_numpy()
    eid = f["event_id"].to_numpy(dtype=object)
    et = f["event_type"].astype(str).to_numpy(dtype=object)

    same = (game[1:] == game[:-1]) & (period[1:] == period[:-1])
    back = np.flatnonzero(same & (t[1:] < t[:-1])) + 1
    for i in back:
        findings.append(Finding(game[i], "timestamp_order", eid[i],
                                f"t={t[i]} precedes t={t[i - 1]} of the previous event in period {period[i]}"))

    if manpower_intervals is not None and len(manpower_intervals):
        idx = covering_interval_index(manpower_intervals, game, period, t)
        mp = manpower_intervals
        team = f["team_id"].astype(str).to_numpy(dtype=object)
        own = f["own_skaters"].to_numpy()
        opp = f["opp_skaters"].to_numpy()
        for i in np.flatnonzero(idx < 0):
            findings.append(Finding(game[i], "manpower_mismatch", eid[i], "no manpower interval covers the event"))
        ok = np.flatnonzero(idx >= 0)
        j = idx[ok]
        home_t = mp["home_team_id"].to_numpy(dtype=object)[j]
        hs = mp["home_skaters"].to_numpy()[j]
        aw = mp["away_skaters"].to_numpy()[j]
        is_home = team[ok] == home_t
        exp_own = np.where(is_home, hs, aw)
        exp_opp = np.where(is_home, aw, hs)
        bad = (own[ok] != exp_own) | (opp[ok] != exp_opp)
        for i, eo, ep in zip(ok[bad], exp_own[bad], exp_opp[bad]):
            findings.append(Finding(game[i], "manpower_mismatch", eid[i],
                                    f"event manpower {own[i]}v{opp[i]} but interval says {eo}v{ep}"))

    link = f["linked_reception_id"].to_numpy(dtype=object)
    known = set(eid[(et == "reception") | (et == "failed_reception")])
    for i in np.flatnonzero((et == "pass") & np.array([v is not None for v in link], dtype=bool)):
        if link[i] not in known:
            findings.append(Finding(game[i], "dangling_link", eid[i], f"linked reception {link[i]} not found"))

    for etype, cols in REQUIRED_ATTRS.items():
        rows = et == etype
        if not rows.any():
            continue
        miss = np.zeros(len(f), dtype=bool)
        for c in cols:
            miss |= f[c].isna().to_numpy()
        for i in np.flatnonzero(rows & miss):
            findings.append(Finding(game[i], "missing_attrs", eid[i], f"{etype} event lacks {'/'.join(cols)}"))

    if shifts is not None and len(shifts):
        ev_games = set(game)
        sg = set(shifts["game_id"].astype(str))
        for g in sorted(ev_games - sg):
            findings.append(Finding(g, "missing_shifts", None, "game has events but no shifts"))

    findings.sort(key=lambda x: (x.game_id, x.kind, x.event_id or ""))
    return ValidationReport(findings)
