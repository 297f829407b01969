import io
import json

import pandas as pd
import pytest

from puckpace.cli import main
from puckpace.events import parse_manpower, parse_shifts
from puckpace.players import toi


def run(*argv):
    buf = io.StringIO()
    code = main([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("season")
    code, text = run("generate", "--seed", 7, "--games", 3, "--teams", "A,B,C", "--team-mult", "A:OZ=1.2",
                     "--output-dir", d)
    assert code == 0, text
    return d


@pytest.fixture(scope="module")
def one_team(tmp_path_factory, data):
    """The same season with every sample belonging to team A."""
    d = tmp_path_factory.mktemp("one_team")
    for name in ("attack.csv", "shifts.csv", "manpower.csv"):
        (d / name).write_bytes((data / name).read_bytes())
    ev = pd.read_csv(data / "events.csv", dtype=str, keep_default_na=False)
    ev = ev[ev["team_id"] == "A"]
    ev.to_csv(d / "events.csv", index=False)
    return d


def test_generate_writes_all_files(data):
    for name in ("events.csv", "attack.csv", "shifts.csv", "manpower.csv", "ledger.jsonl"):
        assert (data / name).stat().st_size > 0


def test_pace_zonal_shape(data):
    code, text = run("pace-zonal", "--data", data, "--by", "zone", "--manpower", "5v5")
    assert code == 0
    df = pd.read_csv(io.StringIO(text))
    assert list(df["zone"]) == ["DZ", "NZ", "OZ"]
    for c in ("phi_t", "phi_ew", "phi_ns", "phi_n"):
        assert c in df and df[c].notna().all()


def test_pace_zonal_json(data):
    code, text = run("pace-zonal", "--data", data, "--by", "zone,team", "--format", "json")
    assert code == 0
    rows = json.loads(text)
    assert len(rows) == 9 and {"zone", "team", "phi_t"} <= set(rows[0])


def test_diff_vs_league_single_team_is_zero(one_team):
    code, text = run("pace-grid", "--data", one_team, "--team", "A", "--diff-vs-league", "--min-exposure", 0)
    assert code == 0
    vals = pd.read_csv(io.StringIO(text), header=None).to_numpy().ravel()
    finite = pd.to_numeric(pd.Series(vals), errors="coerce").dropna()
    assert len(finite) > 0 and (finite == 0).all()


def test_exit_codes(data, capsys):
    assert run("pace-zonal", "--data", data, "--no-such-flag")[0] == 2
    assert run("no-such-command")[0] == 2
    assert run("wowy", "--data", data, "--player", "nobody")[0] == 1
    assert run("pace-zonal", "--data", data, "--by", "colour")[0] == 1
    assert run("pace-zonal", "--events", data / "missing.csv")[0] == 1
    assert "error" in capsys.readouterr().err


def test_bad_event_file_reports_line(tmp_path, data, capsys):
    lines = (data / "events.csv").read_text().splitlines()
    i = next(k for k, line in enumerate(lines) if ",pass," in line)
    lines[i] = lines[i].replace(",pass,", ",teleport,")
    (tmp_path / "events.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "attack.csv").write_bytes((data / "attack.csv").read_bytes())
    code, _ = run("pace-zonal", "--data", tmp_path)
    assert code == 1
    assert f"line {i + 1}" in capsys.readouterr().err


def test_heatmap_svg_is_deterministic_across_workers(tmp_path, data):
    a, b = tmp_path / "w1", tmp_path / "w3"
    assert run("export-heatmap", "--data", data, "--all-teams", "--diff-vs-league", "--smooth",
               "--output-dir", a, "--workers", 1)[0] == 0
    assert run("export-heatmap", "--data", data, "--all-teams", "--diff-vs-league", "--smooth",
               "--output-dir", b, "--workers", 3)[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["A_attacking.svg", "B_attacking.svg", "C_attacking.svg"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
        assert (a / n).read_text().startswith("<svg")


def test_heatmap_csv(data):
    code, text = run("export-heatmap", "--data", data, "--team", "B", "--side", "defending", "--format", "csv")
    assert code == 0 and len(text.splitlines()) > 10


def test_players_min_toi_excludes_short_minutes(data):
    shifts = parse_shifts((data / "shifts.csv").read_text())
    mp = parse_manpower((data / "manpower.csv").read_text())
    t = toi(shifts, mp).sort_values("toi_min")
    skater = t[~t["player_id"].str.contains("-G")].iloc[len(t) // 2]
    cut = float(skater["toi_min"]) + 0.5
    code, text = run("players", "--data", data, "--min-toi", cut)
    assert code == 0
    df = pd.read_csv(io.StringIO(text))
    assert skater["player_id"] not in set(df["player_id"])
    assert (df["toi_min"] >= cut).all()
    code, text = run("players", "--data", data, "--min-toi", 0)
    assert skater["player_id"] in set(pd.read_csv(io.StringIO(text))["player_id"])


def test_default_min_toi_is_200(data):
    code, text = run("players", "--data", data)
    # a three-game season leaves nobody above 200 minutes
    assert code == 0 and len(pd.read_csv(io.StringIO(text))) == 0


@pytest.mark.parametrize("cmd", [
    ["teams"], ["wowy", "--player", "A-F01"], ["entries"], ["shots"], ["passes"],
    ["tendencies", "--group-by", "period"], ["validate", "--strict"],
])
def test_commands_succeed(data, cmd):
    code, text = run(cmd[0], "--data", data, *cmd[1:])
    assert code == 0, text
    assert text.strip()


def test_output_dir(tmp_path, data):
    assert run("entries", "--data", data, "--output-dir", tmp_path)[0] == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["entries.csv", "entry_classes.csv"]
