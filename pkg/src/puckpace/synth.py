"""Seeded synthetic seasons with a ground-truth ledger.

The generator plays out possessions as a small random process whose puck
speeds are known by construction: every move between two possession events
picks a destination ``q`` first and then a speed

    base[zone(q)] * multiplier[team][zone(q)] / u,   u ~ U(1 - spread, 1 + spread)

so the time-weighted speed of a team in a zone recovers ``base * multiplier``
in expectation.  Failed receptions travel ``1 + failed_reception_speed_offset``
times faster than successful ones.  Goal probability grows with the pace of
the five seconds before the shot.

Randomness comes from Python's ``random.Random`` (MT19937), seeded with the
configured integer and consumed only through ``random()``, whose output stream
is fixed across platforms and Python versions.

The :class:`TruthLedger` recomputes the expected pace samples with plain
Python arithmetic on the generator's own bookkeeping.  It does not call the
sequencer or the grid traversal.
"""

from __future__ import annotations

import bisect
import json
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError
from .events import (
    EVENT_COLUMNS,
    MANPOWER_COLUMNS,
    SHIFT_COLUMNS,
    AttackTable,
    EventLog,
    _build_frame,
    write_attack_table,
    write_table,
)
from .rink import NHL, RinkSpec

RNG_NAME = "MT19937 (Python random.Random, random() draws only)"

ENTRY_TYPES = ("1-on-0", "3-on-1", "2-on-1", "3-on-2", "1-on-1", "2-on-2", "3-on-3", "1-on-2", "2-on-3", "dump-in")

DEFAULT_ENTRY_MIX = {
    "1-on-0": 0.03, "3-on-1": 0.03, "2-on-1": 0.06, "3-on-2": 0.10, "1-on-1": 0.10,
    "2-on-2": 0.12, "3-on-3": 0.10, "1-on-2": 0.08, "2-on-3": 0.08, "dump-in": 0.30,
}

# pass-type mixture by the zone the pass leaves from
DEFAULT_PASS_MIX = {
    "DZ": {"d2d": 0.25, "outlet": 0.30, "stretch": 0.15, "ew": 0.10, "rim": 0.10, "other": 0.10},
    "NZ": {"ew": 0.35, "stretch": 0.15, "other": 0.25, "rim": 0.10, "d2d": 0.15},
    "OZ": {"slot": 0.25, "ew": 0.25, "d2d": 0.20, "rim": 0.15, "other": 0.15},
}

_ZONES = ("DZ", "NZ", "OZ")


@dataclass
class TeamConfig:
    team_id: str
    zone_multipliers: Dict[str, float] = field(default_factory=lambda: {"DZ": 1.0, "NZ": 1.0, "OZ": 1.0})
    n_forward_lines: int = 4
    n_defense_pairs: int = 3


@dataclass
class GenConfig:
    seed: int = 0
    n_games: int = 10
    teams: List[TeamConfig] = field(default_factory=lambda: [TeamConfig("A"), TeamConfig("B")])
    league: str = "SYN"
    season: str = "2017-18"
    rink: RinkSpec = NHL
    periods: int = 3
    period_length_s: float = 1200.0
    zone_speeds: Dict[str, float] = field(default_factory=lambda: {"DZ": 22.0, "NZ": 27.0, "OZ": 18.0})
    speed_spread: float = 0.25
    p_shot: float = 0.25  # per action while in the OZ
    p_turnover: float = 0.12  # per action
    p_failed_reception: float = 0.15
    failed_reception_speed_offset: float = 0.20
    p_offensive_recovery: float = 0.40  # after a shot that is not a goal or frozen
    p_on_goal: float = 0.55
    p_deflected: float = 0.06
    p_frozen: float = 0.5
    p_block: float = 0.4
    p_controlled_exit: float = 0.6
    goal_base: float = 0.07
    goal_reference_pace: float = 25.0
    goal_pace_exponent: float = 1.5
    entry_mix: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_ENTRY_MIX))
    pass_mix: Dict[str, Dict[str, float]] = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_PASS_MIX.items()})
    penalties_per_60: float = 6.0
    penalty_length_s: float = 120.0
    shift_length_s: Tuple[float, float] = (35.0, 55.0)
    # cap on possession events per possession (None = unlimited)
    max_possession_events: Optional[int] = None
    # attach per-sample traversed cells to the ledger (slow on big seasons)
    ledger_cells: bool = False

    def validate(self) -> None:
        if not self.teams or len(self.teams) < 2:
            raise ConfigError("need at least two teams")
        if len({t.team_id for t in self.teams}) != len(self.teams):
            raise ConfigError("team ids must be unique")
        if self.n_games < 1 or self.periods < 1:
            raise ConfigError("n_games and periods must be positive")
        for name in ("period_length_s", "penalty_length_s", "goal_reference_pace"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for z in _ZONES:
            if not self.zone_speeds.get(z, 0) > 0:
                raise ConfigError(f"zone speed for {z} must be positive")
            for t in self.teams:
                if not t.zone_multipliers.get(z, 0) > 0:
                    raise ConfigError(f"team {t.team_id}: multiplier for {z} must be positive")
        if not 0 <= self.speed_spread < 1:
            raise ConfigError("speed_spread must be in [0, 1)")
        for name in ("p_shot", "p_turnover", "p_failed_reception", "p_offensive_recovery", "p_on_goal",
                     "p_deflected", "p_frozen", "p_block", "p_controlled_exit", "goal_base"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigError(f"{name} must be a probability, got {v}")
        if self.p_shot + self.p_turnover >= 1:
            raise ConfigError("p_shot + p_turnover must leave room for passes")
        if self.failed_reception_speed_offset <= -1:
            raise ConfigError("failed_reception_speed_offset must exceed -1")
        if self.penalties_per_60 < 0:
            raise ConfigError("penalties_per_60 must be non-negative")
        lo, hi = self.shift_length_s
        if not 0 < lo <= hi:
            raise ConfigError("shift_length_s must be 0 < low <= high")
        _check_mix(self.entry_mix, "entry_mix", ENTRY_TYPES)
        for z in _ZONES:
            _check_mix(self.pass_mix.get(z, {}), f"pass_mix[{z}]", None)
        if self.max_possession_events is not None and self.max_possession_events < 1:
            raise ConfigError("max_possession_events must be >= 1")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["rink"] = asdict(self.rink)
        return d


def _check_mix(mix: Dict[str, float], name: str, allowed) -> None:
    if not mix:
        raise ConfigError(f"{name} is empty")
    if allowed is not None:
        bad = set(mix) - set(allowed)
        if bad:
            raise ConfigError(f"{name} has unknown keys: {', '.join(sorted(bad))}")
    if any(v < 0 for v in mix.values()) or abs(sum(mix.values()) - 1.0) > 1e-9:
        raise ConfigError(f"{name} weights must be non-negative and sum to 1")


# ---------------------------------------------------------------------------
# ledger


_LEDGER_FIELDS = ("sequence_id", "game_id", "period", "team_id", "opponent", "own", "opp", "zone",
                  "from_event_id", "to_event_id", "from_player", "to_player",
                  "d_total", "d_ew", "d_ns", "d_n", "dt", "x0", "y0", "x1", "y1")


@dataclass
class TruthLedger:
    """Expected pace samples plus the configuration that produced them.

    ``columns`` holds one list per field in ``_LEDGER_FIELDS``; ``cells`` holds
    ``(flat_cell, share)`` lists when the config asked for them.
    """

    header: dict
    columns: Dict[str, list] = field(default_factory=lambda: {f: [] for f in _LEDGER_FIELDS})
    cells: Optional[List[List[Tuple[int, float]]]] = None
    n_events: int = 0
    type_counts: Dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.columns["dt"])

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.columns, columns=list(_LEDGER_FIELDS))

    def expected(self, by: Sequence[str] = ("team_id", "zone")) -> Dict[tuple, Dict[str, float]]:
        """Correctly rounded sums and time-weighted speeds per group."""
        acc: Dict[tuple, Dict[str, list]] = {}
        cols = self.columns
        keys = list(zip(*(cols[b] for b in by))) if by else [()] * len(self)
        for i, k in enumerate(keys):
            a = acc.setdefault(k, {"d_total": [], "d_ew": [], "d_ns": [], "d_n": [], "dt": []})
            for c in a:
                a[c].append(cols[c][i])
        out = {}
        for k, a in acc.items():
            sums = {c: math.fsum(v) for c, v in a.items()}
            dt = sums["dt"]
            out[k] = {
                **{"sum_" + c: s for c, s in sums.items()},
                "n_samples": len(a["dt"]),
                "phi_t": sums["d_total"] / dt if dt > 0 else None,
                "phi_ew": sums["d_ew"] / dt if dt > 0 else None,
                "phi_ns": sums["d_ns"] / dt if dt > 0 else None,
                "phi_n": sums["d_n"] / dt if dt > 0 else None,
            }
        return out

    def nominal_speed(self, team_id: str, zone: str) -> float:
        """Construction speed base * multiplier; the time-weighted mean of
        ``base * mult / u`` with E[u] = 1 equals it exactly."""
        cfg = self.header["config"]
        mult = {t["team_id"]: t["zone_multipliers"] for t in cfg["teams"]}
        return cfg["zone_speeds"][zone] * mult[team_id][zone]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": "header", **self.header}, sort_keys=True, separators=(",", ":"))]
        cols = self.columns
        for i in range(len(self)):
            rec = {"kind": "sample", **{f: cols[f][i] for f in _LEDGER_FIELDS}}
            if self.cells is not None:
                rec["cells"] = self.cells[i]
            lines.append(json.dumps(rec, separators=(",", ":")))
        return "\n".join(lines) + "\n"


def _ledger_zone(x: float, blue: float) -> str:
    if x < -blue:
        return "DZ"
    if x > blue:
        return "OZ"
    return "NZ"


# ---------------------------------------------------------------------------
# generation


@dataclass
class SyntheticSeason:
    log: EventLog
    shifts: pd.DataFrame
    manpower: pd.DataFrame
    attack: AttackTable
    ledger: TruthLedger
    event_columns: Dict[str, List[str]]

    def events_text(self, fmt: str = "csv") -> str:
        cols = self.event_columns
        n = len(cols["event_id"])
        if fmt == "csv":
            # generator fields never contain commas or quotes
            out = [",".join(EVENT_COLUMNS)]
            out.extend(",".join(row) for row in zip(*(cols[c] for c in EVENT_COLUMNS)))
            return "\n".join(out) + "\n"
        ints = {"period", "own_skaters", "opp_skaters", "attackers", "defenders"}
        floats = {"t_s", "x", "y", "distance_ft"}
        lines = []
        for i in range(n):
            obj = {}
            for c in EVENT_COLUMNS:
                v = cols[c][i]
                if v == "":
                    obj[c] = None
                elif c in ints:
                    obj[c] = int(v)
                elif c in floats:
                    obj[c] = float(v)
                elif v in ("true", "false") and c in ("deflected", "on_goal", "goal", "controlled"):
                    obj[c] = v == "true"
                else:
                    obj[c] = v
            lines.append(json.dumps(obj, separators=(",", ":")))
        return "\n".join(lines) + "\n"

    def write(self, out_dir, fmt: str = "csv") -> Dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "events": out / ("events.csv" if fmt == "csv" else "events.jsonl"),
            "attack": out / "attack.csv",
            "shifts": out / "shifts.csv",
            "manpower": out / "manpower.csv",
            "ledger": out / "ledger.jsonl",
        }
        paths["events"].write_text(self.events_text(fmt), encoding="utf-8")
        paths["attack"].write_text(write_attack_table(self.attack), encoding="utf-8")
        paths["shifts"].write_text(write_table(self.shifts, SHIFT_COLUMNS), encoding="utf-8")
        paths["manpower"].write_text(write_table(self.manpower, MANPOWER_COLUMNS), encoding="utf-8")
        paths["ledger"].write_text(self.ledger.to_jsonl(), encoding="utf-8")
        return paths


class _Gen:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.rand = self.rng.random
        r = cfg.rink
        self.hl, self.hw, self.cr = r.length_ft / 2, r.width_ft / 2, r.corner_radius_ft
        self.blue = r.blue_line_offset_ft
        self.goal_x = r.length_ft / 2 - r.goal_line_offset_ft
        self.mult = {t.team_id: t.zone_multipliers for t in cfg.teams}
        self.entry_cum = _cumulative(cfg.entry_mix)
        self.pass_cum = {z: _cumulative(cfg.pass_mix[z]) for z in _ZONES}
        self.cols: Dict[str, List[str]] = {c: [] for c in EVENT_COLUMNS}
        self.shift_rows: List[tuple] = []
        self.mp_rows: List[tuple] = []
        self.attack: AttackTable = {}
        self.ledger = TruthLedger(header={"rng": RNG_NAME, "seed": cfg.seed, "config": cfg.as_dict()})

    # -- random helpers -----------------------------------------------------
    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.rand()

    def pick(self, cum: List[Tuple[float, str]]) -> str:
        u = self.rand()
        for c, k in cum:
            if u < c:
                return k
        return cum[-1][1]

    def choice(self, seq):
        return seq[min(int(self.rand() * len(seq)), len(seq) - 1)]

    # -- geometry -------------------------------------------------------------
    def inside(self, x: float, y: float, margin: float = 1.0) -> bool:
        hl, hw, r = self.hl - margin, self.hw - margin, self.cr - margin
        ax, ay = abs(x), abs(y)
        if ax > hl or ay > hw:
            return False
        cx, cy = self.hl - self.cr, self.hw - self.cr
        if r > 0 and ax > cx and ay > cy:
            return (ax - cx) ** 2 + (ay - cy) ** 2 <= r * r
        return True

    def fallback_target(self, x: float, y: float) -> Tuple[float, float]:
        # the inner rounded rectangle is convex, so points toward the centre stay inside
        if math.hypot(x, y) < 2.0:
            return x + 5.0, y
        f = self.uniform(0.2, 0.6)
        return x * (1 - f), y * (1 - f)

    def target(self, kind: str, x: float, y: float) -> Tuple[float, float]:
        u = self.uniform
        for _ in range(12):
            if kind == "carry":
                if x > self.blue:
                    qx, qy = x + u(-15, 15), y + u(-15, 15)
                else:
                    qx, qy = x + u(-5, 30), y + u(-15, 15)
            elif kind == "shot_setup":
                qx, qy = self.goal_x - u(8, 55), u(-25, 25)
            elif kind == "rebound":
                qx, qy = self.goal_x - u(5, 35), u(-25, 25)
            elif kind == "d2d":
                qx, qy = x + u(-10, 5), -math.copysign(u(8, 30), y if y else 1.0)
            elif kind == "ew":
                side = -1.0 if y > 0 else 1.0
                qx, qy = x + u(-10, 10), y + side * u(12, 45)
            elif kind == "stretch":
                qx, qy = x + u(50, 90), y + u(-20, 20)
            elif kind == "outlet":
                qx, qy = x + u(15, 45), y + u(-25, 25)
            elif kind == "slot":
                qx, qy = self.goal_x - u(10, 30), u(-10, 10)
            elif kind == "rim":
                qx, qy = x + u(10, 50), math.copysign(self.hw - 3.0, u(-1, 1))
            else:
                qx, qy = x + u(-20, 40), y + u(-30, 30)
            if self.inside(qx, qy) and math.hypot(qx - x, qy - y) >= 0.5:
                return qx, qy
        return self.fallback_target(x, y)

    def zone(self, x: float) -> str:
        return _ledger_zone(x, self.blue)

    # -- season -------------------------------------------------------------
    def run(self) -> SyntheticSeason:
        cfg = self.cfg
        cfg.validate()
        teams = [t.team_id for t in cfg.teams]
        pairs = [(h, a) for h in teams for a in teams if h != a]
        for gi in range(cfg.n_games):
            home, away = pairs[gi % len(pairs)]
            _GameSim(self, f"G{gi + 1:05d}", home, away).play()
        return self.finish()

    def finish(self) -> SyntheticSeason:
        cfg = self.cfg
        cols = self.cols
        df = pd.DataFrame(cols)
        df["_line"] = np.arange(2, len(df) + 2, dtype=np.int64)
        log = _build_frame(df, cfg.rink, self.attack)
        shifts = pd.DataFrame(self.shift_rows, columns=SHIFT_COLUMNS).astype(
            {"period": np.int64, "start_s": float, "end_s": float})
        mp = pd.DataFrame(self.mp_rows, columns=MANPOWER_COLUMNS).astype(
            {"period": np.int64, "start_s": float, "end_s": float, "home_skaters": np.int64,
             "away_skaters": np.int64})
        self.ledger.n_events = len(df)
        counts: Dict[str, int] = {}
        for et in cols["event_type"]:
            counts[et] = counts.get(et, 0) + 1
        self.ledger.type_counts = dict(sorted(counts.items()))
        if cfg.ledger_cells:
            from .reference import cell_shares

            lc = self.ledger.columns
            self.ledger.cells = [cell_shares(cfg.rink, a, b, c, d)
                                 for a, b, c, d in zip(lc["x0"], lc["y0"], lc["x1"], lc["y1"])]
        return SyntheticSeason(log, shifts, mp, dict(self.attack), self.ledger, cols)


def _cumulative(mix: Dict[str, float]) -> List[Tuple[float, str]]:
    acc = 0.0
    out = []
    for k, v in mix.items():
        acc += v
        out.append((acc, k))
    return out


class _Limit(Exception):
    """Raised when play reaches a penalty or the end of the period."""


class _GameSim:
    def __init__(self, gen: _Gen, game_id: str, home: str, away: str):
        self.g = gen
        self.cfg = gen.cfg
        self.game_id = game_id
        self.home, self.away = home, away
        self.other = {home: away, away: home}
        self.counter = 0
        self.n_seq = 0  # sequence ordinal in game (ledger naming)

    # -- per-period schedules -------------------------------------------------
    def _lineups(self, team: str, period: int):
        cfg, g = self.cfg, self.g
        tc = next(t for t in cfg.teams if t.team_id == team)
        L = cfg.period_length_s
        lo, hi = cfg.shift_length_s
        fwd = [[f"{team}-F{3 * i + j + 1:02d}" for j in range(3)] for i in range(tc.n_forward_lines)]
        dmen = [[f"{team}-D{2 * i + j + 1}" for j in range(2)] for i in range(tc.n_defense_pairs)]
        sched = {}
        for pos, units in (("F", fwd), ("D", dmen)):
            starts, who = [], []
            t, k = 0.0, 0
            while t < L:
                end = min(t + g.uniform(lo, hi), L)
                if L - end < 1.0:
                    end = L
                unit = units[k % len(units)]
                for p in unit:
                    g.shift_rows.append((self.game_id, p, team, pos, period, t, end))
                starts.append(t)
                who.append(unit)
                t, k = end, k + 1
            sched[pos] = (starts, who)
        goalie = f"{team}-G1"
        g.shift_rows.append((self.game_id, goalie, team, "G", period, 0.0, L))
        return sched, goalie

    def on_ice(self, team: str, t: float) -> List[str]:
        out = []
        for pos in ("F", "D"):
            starts, who = self.sched[team][pos]
            out.extend(who[max(bisect.bisect_right(starts, t) - 1, 0)])
        return out

    def _penalties(self, period: int):
        cfg, g = self.cfg, self.g
        L = cfg.period_length_s
        rate = cfg.penalties_per_60 / 3600.0
        pens = []
        t = 0.0
        while rate > 0:
            t += -math.log(1.0 - g.rand()) / rate
            if t >= L - 1.0:
                break
            team = self.home if g.rand() < 0.5 else self.away
            end = min(t + cfg.penalty_length_s, L)
            pens.append((t, end, team))
            t = end
        # tile the period with manpower intervals
        intervals = []
        cur = 0.0
        for (s, e, team) in pens:
            if s > cur:
                intervals.append((cur, s, 5, 5))
            hs, as_ = (4, 5) if team == self.home else (5, 4)
            intervals.append((s, e, hs, as_))
            cur = e
        if cur < L:
            intervals.append((cur, L, 5, 5))
        for (s, e, hs, as_) in intervals:
            g.mp_rows.append((self.game_id, period, s, e, self.home, self.away, hs, as_))
        self.mp_starts = [iv[0] for iv in intervals]
        self.mp = intervals
        return pens

    def manpower(self, team: str, t: float) -> Tuple[int, int]:
        i = max(bisect.bisect_right(self.mp_starts, t) - 1, 0)
        _, _, hs, as_ = self.mp[i]
        return (hs, as_) if team == self.home else (as_, hs)

    # -- event emission -------------------------------------------------------
    def emit(self, t: float, team: str, player: Optional[str], etype: str, x: float, y: float,
             ptm: Optional[str], **attrs) -> dict:
        ev = {"t": t, "k": self.counter, "team": team, "player": player, "type": etype, "x": x, "y": y,
              "ptm": ptm, "attrs": attrs}
        self.counter += 1
        self.period_events.append(ev)
        return ev

    def flush_period(self, period: int) -> None:
        g = self.g
        cols = g.cols
        evs = sorted(self.period_events, key=lambda e: (e["t"], e["k"]))
        base = len(cols["event_id"])
        ids = {}
        for j, ev in enumerate(evs):
            ids[ev["k"]] = f"{self.game_id}-{base + j:07d}"
        sign = {self.home: 1 if period % 2 == 1 else -1}
        sign[self.away] = -sign[self.home]
        for team, s in sign.items():
            g.attack[(self.game_id, team, period)] = s
        cfg = self.cfg
        for ev in evs:
            team = ev["team"]
            s = sign[team]
            own, opp = self.manpower(team, ev["t"])
            ev["own"], ev["opp"] = own, opp
            a = ev["attrs"]
            cols["event_id"].append(ids[ev["k"]])
            cols["game_id"].append(self.game_id)
            cols["league"].append(cfg.league)
            cols["season"].append(cfg.season)
            cols["period"].append(str(period))
            cols["t_s"].append(repr(ev["t"]))
            cols["team_id"].append(team)
            cols["player_id"].append(ev["player"] or "")
            cols["event_type"].append(ev["type"])
            cols["x"].append(repr(s * ev["x"]))
            cols["y"].append(repr(s * ev["y"]))
            cols["possession_team"].append(ev["ptm"] or "")
            cols["own_skaters"].append(str(own))
            cols["opp_skaters"].append(str(opp))
            for c in ("deflected", "on_goal", "goal", "controlled"):
                v = a.get(c)
                cols[c].append("" if v is None else ("true" if v else "false"))
            cols["distance_ft"].append(repr(a["distance_ft"]) if "distance_ft" in a else "")
            cols["attackers"].append(str(a["attackers"]) if "attackers" in a else "")
            cols["defenders"].append(str(a["defenders"]) if "defenders" in a else "")
            cols["pass_type"].append(a.get("pass_type", ""))
            link = a.get("link")
            cols["linked_reception_id"].append(ids[link["k"]] if link is not None else "")
        for poss in self.possessions:
            self._ledger_possession(poss, period, ids)
        self.period_events = []
        self.possessions = []

    def _ledger_possession(self, poss: Tuple[str, List[dict]], period: int, ids: Dict[int, str]) -> None:
        team, evs = poss
        # split into pieces of constant manpower; no piece's final transition counts
        pieces: List[List[dict]] = []
        for ev in evs:
            if pieces and (pieces[-1][-1]["own"], pieces[-1][-1]["opp"]) == (ev["own"], ev["opp"]):
                pieces[-1].append(ev)
            else:
                pieces.append([ev])
        cols = self.g.ledger.columns
        blue = self.g.blue
        for piece in pieces:
            sid = f"{self.game_id}/{self.n_seq}"
            self.n_seq += 1
            for a, b in zip(piece[:-2], piece[1:-1]):
                dx = b["x"] - a["x"]
                dy = b["y"] - a["y"]
                vals = (sid, self.game_id, period, team, self.other[team], a["own"], a["opp"],
                        _ledger_zone(b["x"], blue), ids[a["k"]], ids[b["k"]], a["player"], b["player"],
                        math.sqrt(dx * dx + dy * dy), abs(dy), abs(dx), max(dx, 0.0), b["t"] - a["t"],
                        a["x"], a["y"], b["x"], b["y"])
                for f, v in zip(_LEDGER_FIELDS, vals):
                    cols[f].append(v)

    # -- play -----------------------------------------------------------------
    def play(self) -> None:
        self.sched = {}
        for period in range(1, self.cfg.periods + 1):
            self.period_events: List[dict] = []
            self.possessions: List[Tuple[str, List[dict]]] = []
            self.sched = {}
            goalies = {}
            for team in (self.home, self.away):
                self.sched[team], goalies[team] = self._lineups(team, period)
            self.goalies = goalies
            pens = self._penalties(period)
            self._play_period(pens)
            self.flush_period(period)

    def _faceoff(self, t: float, x_home: float, y_home: float, frame_team: str):
        """Faceoff at a point given in ``frame_team``'s frame; returns the start
        of the winner's possession."""
        g = self.g
        winner = self.home if g.rand() < 0.5 else self.away
        x, y = (x_home, y_home) if winner == frame_team else (-x_home, -y_home)
        self.emit(t, winner, self.on_ice(winner, t)[0], "faceoff", x, y, None)
        jx, jy = x + g.uniform(-4, 4), y + g.uniform(-4, 4)
        if not g.inside(jx, jy):
            jx, jy = x, y
        return winner, jx, jy, t + g.uniform(0.5, 2.0)

    def _play_period(self, pens) -> None:
        g, L = self.g, self.cfg.period_length_s
        pen_i = 0
        start = self._faceoff(0.0, 0.0, 0.0, self.home)
        while True:
            limit = pens[pen_i][0] if pen_i < len(pens) else L
            outcome = None
            if start is not None and start[3] < limit:
                team, x, y, t0 = start
                outcome = self._possession(team, x, y, t0, limit)
            if outcome is None or outcome[0] == "limit" or (outcome[0] in ("turnover", "faceoff")
                                                            and outcome[-1] >= limit):
                if pen_i >= len(pens):
                    return
                tp, _, team = pens[pen_i]
                pen_i += 1
                self.emit(tp, team, g.choice(self.on_ice(team, tp)), "penalty", 0.0, 0.0, None)
                start = self._faceoff(tp, 0.0, 0.0, team)
                continue
            if outcome[0] == "turnover":
                _, team, x, y, t = outcome
                start = (team, x, y, t)
            else:
                _, team, x, y, t = outcome
                start = self._faceoff(t, x, y, team)

    def _move(self, team: str, x: float, y: float, t: float, qx: float, qy: float,
              limit: float, factor: float = 1.0):
        """Arrival time at (qx, qy) and the blue-line crossings on the way as
        ``(time, kind, x, y)``; nothing is emitted here."""
        g = self.g
        z = g.zone(qx)
        u = g.uniform(1 - self.cfg.speed_spread, 1 + self.cfg.speed_spread)
        speed = self.cfg.zone_speeds[z] * g.mult[team][z] * factor / u
        dt = math.hypot(qx - x, qy - y) / speed
        t1 = t + dt
        if t1 >= limit:
            raise _Limit
        b = g.blue
        crossings = []
        if x < -b <= qx:
            s = (-b - x) / (qx - x)
            crossings.append((t + dt * s, "zone_exit", -b, y + s * (qy - y)))
        if x <= b < qx:
            s = (b - x) / (qx - x)
            crossings.append((t + dt * s, "zone_entry", b, y + s * (qy - y)))
        return t1, crossings

    def _cross(self, team: str, holder: str, crossings) -> None:
        g = self.g
        for t, kind, x, y in crossings:
            if kind == "zone_exit":
                self.emit(t, team, holder, kind, x, y, team, controlled=g.rand() < self.cfg.p_controlled_exit)
                continue
            etype = g.pick(g.entry_cum)
            if etype == "dump-in":
                att, dfn, ctl = 0, 0, False
            else:
                att, dfn, ctl = int(etype[0]), int(etype[-1]), True
            self.emit(t, team, holder, kind, x, y, team, controlled=ctl, attackers=att, defenders=dfn)

    def _possession(self, team: str, x: float, y: float, t: float, limit: float):
        g, cfg = self.g, self.cfg
        opp = self.other[team]
        pevs: List[dict] = []
        trans: List[Tuple[float, float, float]] = []  # (t_to, d, dt) of possession moves
        self.possessions.append((team, pevs))

        def poss(ev):
            if pevs:
                p = pevs[-1]
                trans.append((ev["t"], math.hypot(ev["x"] - p["x"], ev["y"] - p["y"]), ev["t"] - p["t"]))
            pevs.append(ev)
            return ev

        def turnover(px, py, pt):
            jx, jy = -px + g.uniform(-3, 3), -py + g.uniform(-3, 3)
            if not g.inside(jx, jy):
                jx, jy = -px, -py
            return ("turnover", opp, jx, jy, pt + g.uniform(0.5, 2.0))

        holder = g.choice(self.on_ice(team, t))
        poss(self.emit(t, team, holder, "puck_recovery", x, y, team))
        cap = cfg.max_possession_events
        try:
            while True:
                r = g.rand()
                in_oz = x > g.blue
                room = None if cap is None else cap - len(pevs)
                if in_oz and r < cfg.p_shot:
                    action = "shot"
                elif r < cfg.p_shot + cfg.p_turnover:
                    action = "turnover"
                else:
                    action = "pass"
                if room is not None and ((action == "pass" and room < 3) or (action == "shot" and room < 2)):
                    action = "turnover"
                if action == "turnover":
                    return turnover(x, y, t)

                if action == "pass":
                    px, py = g.target("carry", x, y)
                    t, cr = self._move(team, x, y, t, px, py, limit)
                    self._cross(team, holder, cr)
                    on = self.on_ice(team, t)
                    if holder not in on:
                        holder = g.choice(on)
                    kind = g.pick(g.pass_cum[g.zone(px)])
                    qx, qy = g.target(kind, px, py)
                    failed = g.rand() < cfg.p_failed_reception
                    factor = 1 + cfg.failed_reception_speed_offset if failed else 1.0
                    t2, cr = self._move(team, px, py, t, qx, qy, limit, factor)
                    pass_ev = poss(self.emit(t, team, holder, "pass", px, py, team, pass_type=kind))
                    self._cross(team, holder, cr)
                    on = self.on_ice(team, t2)
                    mates = [p for p in on if p != holder] or on
                    receiver = g.choice(mates)
                    if failed:
                        rec = self.emit(t2, team, receiver, "failed_reception", qx, qy, team)
                        pass_ev["attrs"]["link"] = rec
                        return turnover(qx, qy, t2)
                    rec = poss(self.emit(t2, team, receiver, "reception", qx, qy, team))
                    pass_ev["attrs"]["link"] = rec
                    holder, x, y, t = receiver, qx, qy, t2
                    continue

                # shot
                sx, sy = g.target("shot_setup", x, y)
                t, cr = self._move(team, x, y, t, sx, sy, limit)
                self._cross(team, holder, cr)
                on = self.on_ice(team, t)
                if holder not in on:
                    holder = g.choice(on)
                x, y = sx, sy
                # goal chance follows the pace of the moves that led here; the
                # setup move into the shot only counts when nothing else does
                trans_window = [(d, dt) for (tt, d, dt) in trans if t - 5.0 <= tt <= t]
                if not trans_window:
                    tail = pevs[-1]
                    trans_window.append((math.hypot(x - tail["x"], y - tail["y"]), t - tail["t"]))
                sd = sum(d for d, _ in trans_window)
                st = sum(dt for _, dt in trans_window)
                pace = sd / st if st > 0 else 0.0
                p_goal = min(0.9, cfg.goal_base * (pace / cfg.goal_reference_pace) ** cfg.goal_pace_exponent)
                goal = g.rand() < p_goal
                on_goal = goal or g.rand() < cfg.p_on_goal
                deflected = g.rand() < cfg.p_deflected
                dist = math.hypot(g.goal_x - x, y)
                poss(self.emit(t, team, holder, "shot", x, y, team, deflected=deflected, on_goal=on_goal,
                               goal=goal, distance_ft=dist))
                if goal:
                    return ("faceoff", team, 0.0, 0.0, t + g.uniform(0.5, 3.0))
                if on_goal:
                    self.emit(t, opp, self.goalies[opp], "save", -g.goal_x, 0.0, team)
                    if g.rand() < cfg.p_frozen:
                        return ("faceoff", team, g.goal_x - 20.0, math.copysign(22.0, g.uniform(-1, 1)),
                                t + g.uniform(0.5, 3.0))
                elif g.rand() < cfg.p_block:
                    bx, by = x + 0.3 * (g.goal_x - x), 0.7 * y
                    self.emit(t, opp, g.choice(self.on_ice(opp, t)), "block", -bx, -by, team)
                qx, qy = g.target("rebound", x, y)
                if g.rand() < cfg.p_offensive_recovery:
                    t, cr = self._move(team, x, y, t, qx, qy, limit)
                    self._cross(team, holder, cr)
                    holder = g.choice(self.on_ice(team, t))
                    x, y = qx, qy
                    poss(self.emit(t, team, holder, "puck_recovery", x, y, team))
                    continue
                return ("turnover", opp, -qx, -qy, t + g.uniform(0.5, 2.5))
        except _Limit:
            return ("limit",)


def generate(cfg: GenConfig) -> SyntheticSeason:
    """Play out ``cfg.n_games`` games; same config and seed give identical output."""
    return _Gen(cfg).run()
