"""Small builders and an independent sequencing oracle shared by the tests."""

from __future__ import annotations

import csv
import io
import math
from typing import Dict, Iterable, List, Optional, Sequence

from puckpace.events import EVENT_COLUMNS, parse_events
from puckpace.rink import NHL, RinkSpec

POSSESSION = {"pass", "reception", "puck_recovery", "shot"}
STOPS = {"stoppage", "faceoff", "penalty"}

_DEFAULT = {
    "game_id": "G1", "league": "L", "season": "S", "period": 1, "team_id": "A",
    "own_skaters": 5, "opp_skaters": 5,
}
_ATTRS = {
    "shot": {"deflected": "false", "on_goal": "true", "goal": "false"},
    "zone_entry": {"controlled": "true", "attackers": 2, "defenders": 1},
    "zone_exit": {"controlled": "true"},
    "pass": {"pass_type": "other"},
}


def ev(event_type: str, t: float, x: float, y: float = 0.0, team: str = "A", **kw) -> dict:
    row = dict(_DEFAULT)
    row.update(_ATTRS.get(event_type, {}))
    row.update(event_type=event_type, t_s=t, x=x, y=y, team_id=team)
    if event_type in POSSESSION:
        row.setdefault("possession_team", team)
    row.update(kw)
    return row


def events_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_COLUMNS)
    for i, r in enumerate(rows):
        r = dict(r)
        r.setdefault("event_id", f"e{i + 1}")
        w.writerow(["" if r.get(c) is None else r.get(c, "") for c in EVENT_COLUMNS])
    return buf.getvalue()


def make_log(rows: Sequence[dict], rink: RinkSpec = NHL, signs: Optional[Dict[tuple, int]] = None):
    attack = {}
    for r in rows:
        g = r.get("game_id", "G1")
        p = int(r.get("period", 1))
        for t in {r.get("team_id", "A"), "A", "B"}:
            attack[(g, t, p)] = (signs or {}).get((g, t, p), 1)
    return parse_events(events_csv(rows), "csv", rink, attack)


# ---------------------------------------------------------------------------
# brute-force sequencing oracle: plain loops over the normalized frame


def _zone(x: float, blue: float) -> str:
    if x < -blue:
        return "DZ"
    if x > blue:
        return "OZ"
    return "NZ"


def oracle_sequences(frame, possession_types: Iterable[str] = POSSESSION) -> List[dict]:
    """Standard sequences as dicts with the row numbers of their events."""
    types = set(possession_types)
    seqs: List[dict] = []
    cur: Optional[dict] = None
    last_game = None

    def close(reason: str):
        nonlocal cur
        if cur is not None:
            cur["reason"] = reason
            seqs.append(cur)
        cur = None

    rows = frame.to_dict("records")
    for i, r in enumerate(rows):
        g = r["game_id"]
        if g != last_game:
            close("end_of_data")
            last_game = g
        et = r["event_type"]
        if et in STOPS:
            close("stoppage")
            continue
        if et not in types or r["possession_team"] != r["team_id"]:
            continue
        mp = (int(r["own_skaters"]), int(r["opp_skaters"]))
        if cur is not None:
            if r["period"] != cur["period"]:
                close("stoppage")
            elif r["team_id"] != cur["team"]:
                close("possession_change")
            elif mp != cur["manpower"]:
                close("manpower_change")
        if cur is None:
            cur = {"game": g, "team": r["team_id"], "period": r["period"], "manpower": mp, "rows": []}
        cur["rows"].append(i)
    close("end_of_data")
    return seqs


def oracle_samples(frame, blue: float, possession_types: Iterable[str] = POSSESSION) -> List[dict]:
    """Counted transitions, zone-tagged with the destination event's zone."""
    rows = frame.to_dict("records")
    out = []
    for s in oracle_sequences(frame, possession_types):
        idx = s["rows"]
        for a, b in zip(idx[:-2], idx[1:-1]):
            ra, rb = rows[a], rows[b]
            dt = rb["t_s"] - ra["t_s"]
            if dt <= 0:
                continue
            dx = rb["x"] - ra["x"]
            dy = rb["y"] - ra["y"]
            out.append({
                "from_row": a, "to_row": b, "zone": _zone(rb["x"], blue), "team_id": s["team"],
                "d_total": math.hypot(dx, dy), "d_ew": abs(dy), "d_ns": abs(dx), "d_n": max(dx, 0.0), "dt": dt,
            })
    return out


def rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)
