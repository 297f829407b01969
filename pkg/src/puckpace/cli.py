"""``puckpace`` command line.

Every analysis command reads an event file plus its attack-direction table,
either named explicitly or found as ``events.csv``/``events.jsonl`` and
``attack.csv`` under ``--data``.  Tables go to stdout unless ``--output-dir``
is given.  Exit codes: 0 success, 1 analysis or input error, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .errors import ConfigError, PuckpaceError
from .events import EventLog, parse_attack_table, parse_events, parse_manpower, parse_shifts, validate
from .outcomes import entry_table, pass_reception_speeds, preshot_quintiles, tendency_counters
from .players import individual_pace, player_table, toi, wowy
from .polygrid import grid_csv, smooth
from .render import render_svg
from .rink import load_rink
from .sequencing import DEFAULT_POSSESSION_TYPES, sequence_table
from .synth import GenConfig, TeamConfig, generate
from .teams import SIDES, side_grid, team_polygrid, team_zonal

GROUP_KEYS = ("zone", "period", "manpower", "league", "season", "team", "opponent")


# ---------------------------------------------------------------------------
# argument helpers


def parse_manpower_flag(text: str) -> Optional[Tuple[int, int]]:
    if text.lower() in ("all", "any", ""):
        return None
    try:
        a, b = text.lower().split("v")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"manpower must look like 5v5 or 'all', got {text!r}") from None


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rink", default="nhl", help="nhl, ahl, shl or a key=value rink file (default nhl)")
    p.add_argument("--data", type=Path, help="directory holding events/attack/shifts/manpower files")
    p.add_argument("--events", type=Path, help="event file (.csv or .jsonl)")
    p.add_argument("--attack", type=Path, help="attack-direction table CSV")
    p.add_argument("--shifts", type=Path, help="shift table CSV")
    p.add_argument("--manpower-intervals", type=Path, help="manpower interval table CSV")
    p.add_argument("--input-format", choices=("csv", "jsonl"), help="event format (default: from extension)")
    p.add_argument("--possession-types", default=",".join(sorted(DEFAULT_POSSESSION_TYPES)),
                   help="comma-separated possession event types")
    p.add_argument("--output-dir", type=Path, help="write outputs here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    p.add_argument("--workers", type=int, default=1, help="worker threads for sequencing")


def _manpower_opt(p, default="5v5"):
    p.add_argument("--manpower", type=parse_manpower_flag, default=parse_manpower_flag(default),
                   help=f"manpower filter like 5v5 or 'all' (default {default})")


def _grid_opts(p):
    p.add_argument("--team", help="team id (omit for the league grid)")
    p.add_argument("--side", choices=SIDES, default="attacking")
    p.add_argument("--diff-vs-league", action="store_true", help="team minus league differential")
    p.add_argument("--smooth", action="store_true", help="apply the 3x3 Gaussian kernel")
    p.add_argument("--sigma", type=_positive, default=0.5, help="kernel sigma in cells (default 0.5)")
    p.add_argument("--min-exposure", type=_nonneg, default=60.0, help="mask cells with less time (s)")
    p.add_argument("--allocation", choices=("equal", "chord"), default="equal")
    p.add_argument("--leave-one-out", action="store_true", help="exclude the team from the league baseline")
    _manpower_opt(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="puckpace", description="Pace-of-play analytics for hockey event data.")
    parser.add_argument("--version", action="version", version=f"puckpace {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded synthetic season")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--games", type=int, default=10)
    g.add_argument("--teams", default="A,B", help="comma-separated team ids")
    g.add_argument("--team-mult", action="append", default=[], metavar="TEAM[:ZONE]=X",
                   help="speed multiplier for a team (all zones, or one zone); repeatable")
    g.add_argument("--events-format", choices=("csv", "jsonl"), default="csv")
    g.add_argument("--ledger-cells", action="store_true", help="record traversed cells in the ledger")
    g.add_argument("--output-dir", type=Path, required=True)
    g.add_argument("--rink", default="nhl")

    v = sub.add_parser("validate", help="report data-quality findings")
    _common(v)
    v.add_argument("--strict", action="store_true", help="exit 1 when there are findings")

    pz = sub.add_parser("pace-zonal", help="speeds grouped by zone and other keys")
    _common(pz)
    pz.add_argument("--by", default="zone", help=f"comma list from {','.join(GROUP_KEYS)}")
    pz.add_argument("--mean-of-speeds", action="store_true", help="average per-transition speeds")
    _manpower_opt(pz, "all")

    pg = sub.add_parser("pace-grid", help="polygrid speeds as a CSV matrix")
    _common(pg)
    _grid_opts(pg)

    eh = sub.add_parser("export-heatmap", help="write grid heatmaps as CSV or SVG")
    _common(eh)
    _grid_opts(eh)
    eh.set_defaults(format="svg")
    eh.add_argument("--all-teams", action="store_true", help="one file per team as <team>_<side>")
    # --format here picks csv/svg instead of csv/json
    for a in eh._actions:
        if a.dest == "format":
            a.choices = ("csv", "svg")

    t = sub.add_parser("teams", help="team attacking/defending pace vs league")
    _common(t)
    _manpower_opt(t)
    t.add_argument("--mean-of-speeds", action="store_true")
    t.add_argument("--leave-one-out", action="store_true")

    pl = sub.add_parser("players", help="adjusted individual pace per zone")
    _common(pl)
    _manpower_opt(pl)
    pl.add_argument("--min-toi", type=_nonneg, default=200.0, help="minimum 5v5 minutes (default 200)")
    pl.add_argument("--sort-by", default="OZ_pct_t")
    pl.add_argument("--top", type=int, help="keep the first N rows")
    pl.add_argument("--bottom", type=int, help="keep the last N rows")

    w = sub.add_parser("wowy", help="with/without split for one player")
    _common(w)
    _manpower_opt(w)
    w.add_argument("--player", required=True)
    w.add_argument("--weighting", choices=("sequence", "time"), default="sequence")

    e = sub.add_parser("entries", help="zone-entry danger table")
    _common(e)
    _manpower_opt(e)
    e.add_argument("--entry-shot-window", type=_positive, default=5.0, help="shot-after window (s)")
    e.add_argument("--shooting-window", type=_positive, default=5.0, help="shooting %% window (s)")

    s = sub.add_parser("shots", help="pre-shot pace quintiles")
    _common(s)
    _manpower_opt(s)
    s.add_argument("--window", type=_positive, default=5.0)
    s.add_argument("--groups", type=int, default=5)

    ps = sub.add_parser("passes", help="pass speed by type and reception outcome")
    _common(ps)
    _manpower_opt(ps)

    td = sub.add_parser("tendencies", help="per-game tendency counters")
    _common(td)
    _manpower_opt(td)
    td.add_argument("--group-by", default="league,season", help="comma list from league,season,period")
    return parser


# ---------------------------------------------------------------------------
# input/output


def _find(args, explicit: Optional[Path], names: Sequence[str], required: bool, what: str) -> Optional[Path]:
    if explicit is not None:
        if not explicit.exists():
            raise ConfigError(f"{what} file not found: {explicit}")
        return explicit
    if args.data is not None:
        for n in names:
            p = args.data / n
            if p.exists():
                return p
    if required:
        raise ConfigError(f"no {what} file: pass --{what} or --data with {' or '.join(names)}")
    return None


def load_log(args) -> EventLog:
    rink = load_rink(args.rink)
    ev = _find(args, args.events, ("events.csv", "events.jsonl"), True, "events")
    at = _find(args, args.attack, ("attack.csv",), True, "attack")
    fmt = args.input_format or ("jsonl" if ev.suffix in (".jsonl", ".ndjson", ".json") else "csv")
    attack = parse_attack_table(at.read_text(encoding="utf-8"))
    return parse_events(ev.read_text(encoding="utf-8"), fmt, rink, attack)


def load_shifts(args, required: bool) -> Optional[pd.DataFrame]:
    p = _find(args, args.shifts, ("shifts.csv",), required, "shifts")
    return None if p is None else parse_shifts(p.read_text(encoding="utf-8"))


def load_manpower(args, required: bool) -> Optional[pd.DataFrame]:
    p = _find(args, args.manpower_intervals, ("manpower.csv",), required, "manpower-intervals")
    return None if p is None else parse_manpower(p.read_text(encoding="utf-8"))


def _table(args, log: EventLog):
    types = [t.strip() for t in args.possession_types.split(",") if t.strip()]
    return sequence_table(log, log.rink, types, workers=max(1, args.workers))


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return None if not math.isfinite(v) else float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if v is pd.NA or v is None:
        return None
    return v if isinstance(v, (int, str, bool)) else str(v)


def table_text(df: pd.DataFrame, fmt: str) -> str:
    if fmt == "json":
        recs = [{c: _json_value(v) for c, v in zip(df.columns, row)} for row in df.itertuples(index=False)]
        return json.dumps(recs, indent=1) + "\n"
    buf = io.StringIO()
    df.to_csv(buf, index=False, lineterminator="\n")
    return buf.getvalue()


def emit(args, name: str, text: str, out) -> None:
    if args.output_dir is None:
        out.write(text)
        return
    args.output_dir.mkdir(parents=True, exist_ok=True)
    (args.output_dir / name).write_text(text, encoding="utf-8")


def emit_table(args, name: str, df: pd.DataFrame, out) -> None:
    emit(args, f"{name}.{args.format}", table_text(df, args.format), out)


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args, out) -> int:
    teams = [t.strip() for t in args.teams.split(",") if t.strip()]
    mult = {t: {"DZ": 1.0, "NZ": 1.0, "OZ": 1.0} for t in teams}
    for spec in args.team_mult:
        try:
            key, val = spec.split("=")
            team, _, zone = key.partition(":")
            x = float(val)
        except ValueError:
            raise ConfigError(f"bad --team-mult {spec!r}; expected TEAM=X or TEAM:ZONE=X") from None
        if team not in mult:
            raise ConfigError(f"--team-mult names unknown team {team!r}")
        for z in ([zone] if zone else ["DZ", "NZ", "OZ"]):
            if z not in mult[team]:
                raise ConfigError(f"--team-mult names unknown zone {z!r}")
            mult[team][z] = x
    cfg = GenConfig(seed=args.seed, n_games=args.games, teams=[TeamConfig(t, mult[t]) for t in teams],
                    rink=load_rink(args.rink), ledger_cells=args.ledger_cells)
    season = generate(cfg)
    paths = season.write(args.output_dir, args.events_format)
    out.write(f"wrote {len(season.log)} events, {len(season.ledger)} ledger samples to {args.output_dir}\n")
    for k, p in paths.items():
        out.write(f"  {k}: {p.name}\n")
    return 0


def cmd_validate(args, out) -> int:
    log = load_log(args)
    report = validate(log, load_shifts(args, False), load_manpower(args, False))
    df = pd.DataFrame([(f.game_id, f.kind, f.event_id, f.message) for f in report.findings],
                      columns=["game_id", "kind", "event_id", "message"])
    emit_table(args, "validate", df, out)
    sys.stderr.write(f"{len(log)} events, {len(report)} findings\n")
    return 1 if args.strict and len(report) else 0


_BY_COLS = {"team": "team_id", "opponent": "opponent"}


def cmd_pace_zonal(args, out) -> int:
    from .metrics import aggregate_frame

    by = [b.strip() for b in args.by.split(",") if b.strip()]
    bad = [b for b in by if b not in GROUP_KEYS]
    if bad:
        raise ConfigError(f"unknown --by key(s): {', '.join(bad)}")
    tab = _table(args, load_log(args))
    samples = tab.filter_manpower(args.manpower)
    cols = [_BY_COLS.get(b, b) for b in by]
    df = aggregate_frame(samples, cols, "mean" if args.mean_of_speeds else "time")
    df = df.rename(columns={v: k for k, v in _BY_COLS.items()})
    emit_table(args, "pace_zonal", df, out)
    return 0


def _grid_for(args, tab, team: Optional[str]):
    if args.diff_vs_league:
        if team is None:
            raise ConfigError("--diff-vs-league needs --team")
        tg = team_polygrid(tab, team, args.side, args.manpower, args.sigma, args.min_exposure, args.allocation,
                           pre_smooth=args.smooth, leave_one_out=args.leave_one_out)
        return tg.differential, True
    g = side_grid(tab, team, args.side, args.manpower, args.allocation)
    sg = g.speed(args.min_exposure)
    return (smooth(sg, args.sigma) if args.smooth else sg), False


def _grid_json(g) -> str:
    vals = [[None if not (ok and math.isfinite(v)) else round(float(v), 6) for v, ok in zip(row, vrow)]
            for row, vrow in zip(g.values, g.valid)]
    return json.dumps({"rows": g.values.shape[0], "cols": g.values.shape[1], "values": vals}) + "\n"


def cmd_pace_grid(args, out) -> int:
    tab = _table(args, load_log(args))
    g, _ = _grid_for(args, tab, args.team)
    text = grid_csv(g) if args.format == "csv" else _grid_json(g)
    emit(args, f"pace_grid.{args.format}", text, out)
    return 0


def cmd_export_heatmap(args, out) -> int:
    tab = _table(args, load_log(args))
    if args.all_teams:
        teams = sorted(set(tab.samples["team_id"].astype(str)))
    else:
        teams = [args.team]
    if args.all_teams and args.output_dir is None:
        raise ConfigError("--all-teams needs --output-dir")
    for team in teams:
        g, is_diff = _grid_for(args, tab, team)
        label = f"{team or 'league'}_{args.side}"
        if args.format == "svg":
            title = f"{label}{' vs league' if is_diff else ''} (ft/s)"
            text = render_svg(g, title=title, diverging=is_diff)
        else:
            text = grid_csv(g)
        emit(args, f"{label}.{args.format}", text, out)
    return 0


def cmd_teams(args, out) -> int:
    tab = _table(args, load_log(args))
    df = team_zonal(tab, args.manpower, "mean" if args.mean_of_speeds else "time", args.leave_one_out)
    emit_table(args, "teams", df, out)
    return 0


def cmd_players(args, out) -> int:
    log = load_log(args)
    shifts = load_shifts(args, True)
    mp = load_manpower(args, True)
    tab = _table(args, log)
    state = args.manpower or (5, 5)
    ind = individual_pace(tab, shifts, args.manpower)
    table = player_table(ind, toi(shifts, mp, state), args.min_toi, args.sort_by)
    if args.top is not None:
        table = table.head(args.top)
    elif args.bottom is not None:
        table = table.tail(args.bottom)
    emit_table(args, "players", table, out)
    return 0


def cmd_wowy(args, out) -> int:
    log = load_log(args)
    shifts = load_shifts(args, True)
    res = wowy(_table(args, log), shifts, args.player, args.manpower, args.weighting)
    emit_table(args, "wowy", res.table, out)
    p = res.partition
    sys.stderr.write(f"with {p['with']}, without {p['without']}, excluded {p['excluded']}\n")
    return 0


def cmd_entries(args, out) -> int:
    res = entry_table(_table(args, load_log(args)), args.manpower, args.entry_shot_window, args.shooting_window)
    emit_table(args, "entries", res.by_type, out)
    emit_table(args, "entry_classes", res.by_class, out)
    return 0


def cmd_shots(args, out) -> int:
    res = preshot_quintiles(_table(args, load_log(args)), args.window, args.manpower, args.groups)
    emit_table(args, "shots", res.table, out)
    return 0


def cmd_passes(args, out) -> int:
    res = pass_reception_speeds(load_log(args), args.manpower)
    emit_table(args, "passes", res.table, out)
    sys.stderr.write(f"unlinked {res.diagnostics['unlinked']}, dropped dt<=0 {res.diagnostics['dropped_dt']}\n")
    return 0


def cmd_tendencies(args, out) -> int:
    log = load_log(args)
    mp = load_manpower(args, False)
    group_by = [g.strip() for g in args.group_by.split(",") if g.strip()]
    df = tendency_counters(_table(args, log), group_by, args.manpower, mp)
    emit_table(args, "tendencies", df, out)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "pace-zonal": cmd_pace_zonal,
    "pace-grid": cmd_pace_grid,
    "export-heatmap": cmd_export_heatmap,
    "teams": cmd_teams,
    "players": cmd_players,
    "wowy": cmd_wowy,
    "entries": cmd_entries,
    "shots": cmd_shots,
    "passes": cmd_passes,
    "tendencies": cmd_tendencies,
}


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except (PuckpaceError, ValueError) as exc:
        sys.stderr.write(f"puckpace {args.command}: error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"puckpace {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
