import dataclasses
import math

import numpy as np
import pandas as pd
import pytest

from puckpace.errors import AnalysisError
from puckpace.polygrid import build_grid
from puckpace.sequencing import sequence_table
from puckpace.teams import league_zonal, repeatability, side_grid, team_polygrid, team_zonal


def only_team(tab, team):
    smp = tab.samples
    return dataclasses.replace(tab, samples=smp[smp["team_id"].astype(str) == team].reset_index(drop=True))


def test_one_team_league_is_zero(tab):
    t = team_zonal(only_team(tab, "A"), manpower=None)
    att = t[t["side"] == "attacking"]
    assert len(att) == 3
    assert (att[["pct_t", "pct_ew", "pct_ns", "pct_n"]].to_numpy() == 0).all()


def test_league_totals_equal_sum_of_teams(tab):
    t = team_zonal(tab, manpower=None)
    att = t[t["side"] == "attacking"].groupby("zone")[["sum_d_total", "sum_dt", "n_samples"]].sum()
    league = league_zonal(tab).set_index("zone")
    for z in ("DZ", "NZ", "OZ"):
        assert att.loc[z, "n_samples"] == league.loc[z, "n_samples"]
        assert att.loc[z, "sum_d_total"] == pytest.approx(league.loc[z, "sum_d_total"], rel=1e-12)
        assert att.loc[z, "sum_dt"] == pytest.approx(league.loc[z, "sum_dt"], rel=1e-12)


def test_defending_is_opponent_attacking(tab):
    smp = tab.filter_manpower((5, 5))
    for game in smp["game_id"].astype(str).unique()[:2]:
        g = smp[smp["game_id"].astype(str) == game]
        a_def = g[g["opponent"].astype(str) == "A"].sort_values(["zone", "d_total", "dt"])
        b_att = g[g["team_id"].astype(str) == "B"].sort_values(["zone", "d_total", "dt"])
        cols = ["zone", "d_total", "d_ew", "d_ns", "d_n", "dt"]
        pd.testing.assert_frame_equal(a_def[cols].reset_index(drop=True), b_att[cols].reset_index(drop=True))
    t = team_zonal(tab).set_index(["team_id", "side", "zone"])
    for z in ("DZ", "NZ", "OZ"):
        assert t.loc[("A", "defending", z), "phi_t"] == t.loc[("B", "attacking", z), "phi_t"]




@pytest.fixture(scope="module")
def fast_a():
    from puckpace.synth import GenConfig, TeamConfig, generate
    s = generate(GenConfig(seed=21, n_games=12, teams=[TeamConfig("A", {"DZ": 1.1, "NZ": 1.1, "OZ": 1.1}),
                                                      TeamConfig("B")]))
    return s, sequence_table(s.log)


def test_pooled_baseline_split(fast_a):
    season, tab = fast_a
    t = team_zonal(tab).set_index(["team_id", "side", "zone"])
    # equal distance totals at speeds 1.1v and v pool to 2.2v/2.1
    want_a = 100 * (1.1 * 2.1 / 2.2 - 1)
    want_b = 100 * (2.1 / 2.2 - 1)
    for z in ("DZ", "NZ", "OZ"):
        assert t.loc[("A", "attacking", z), "pct_t"] == pytest.approx(want_a, abs=1.0)
        assert t.loc[("B", "attacking", z), "pct_t"] == pytest.approx(want_b, abs=1.0)
    # exact replay from the ledger
    led = season.ledger.frame()
    led = led[(led["own"] == 5) & (led["opp"] == 5)]
    for z in ("DZ", "NZ", "OZ"):
        lz = led[led["zone"] == z]
        league = math.fsum(lz["d_total"]) / math.fsum(lz["dt"])
        a = lz[lz["team_id"] == "A"]
        phi_a = math.fsum(a["d_total"]) / math.fsum(a["dt"])
        assert t.loc[("A", "attacking", z), "pct_t"] == pytest.approx(100 * (phi_a - league) / league, rel=1e-9)


def test_leave_one_out(fast_a):
    _season, tab = fast_a
    loo = team_zonal(tab, leave_one_out=True).set_index(["team_id", "side", "zone"])
    base = team_zonal(tab).set_index(["team_id", "side", "zone"])
    for z in ("DZ", "NZ", "OZ"):
        a, b = base.loc[("A", "attacking", z), "phi_t"], base.loc[("B", "attacking", z), "phi_t"]
        assert loo.loc[("A", "attacking", z), "pct_t"] == pytest.approx(100 * (a - b) / b, rel=1e-12)


def test_grid_equal_to_league_is_zero(tab):
    one = only_team(tab, "A")
    tg = team_polygrid(one, "A", min_exposure=1.0)
    d = tg.differential
    assert d.defined.any()
    assert (d.values[d.defined] == 0).all()


def test_oz_only_speedup_shows_right_of_blue_line(three_team_season):
    tab = sequence_table(three_team_season.log)
    d = team_polygrid(tab, "A", min_exposure=1.0).differential
    cols_x = -100 + 5 * np.arange(40) + 2.5
    oz = d.values[:, cols_x > 35]
    rest = d.values[:, cols_x < 15]
    assert np.nanmean(oz) > 1.0
    assert abs(np.nanmean(rest)) < 0.25 * np.nanmean(oz)


def test_defending_grid_is_mirrored(tab):
    a = side_grid(tab, "A", "defending")
    smp = tab.filter_manpower((5, 5))
    b = build_grid(tab.rink)
    b.accumulate_frame(smp[smp["team_id"].astype(str) == "B"], mirror=True)
    np.testing.assert_array_equal(a.dist, b.dist)


def test_masked_cells_absent(tab):
    d = team_polygrid(tab, "A", min_exposure=1e9).differential
    assert not d.defined.any()


def test_unknown_team(tab):
    with pytest.raises(AnalysisError):
        team_polygrid(tab, "ZZZ")


def test_repeatability_identity(tab):
    t = team_zonal(tab)
    paired, corr = repeatability(t, t)
    assert len(paired) == len(t)
    assert all(math.isnan(v) for v in corr.values())  # only two teams per (side, zone)
    t3 = pd.concat([t, t.assign(team_id=t["team_id"] + "x", pct_t=t["pct_t"] * 2)])
    _p, corr = repeatability(t3, t3)
    assert all(v == pytest.approx(1.0) for v in corr.values())
