import math

import pytest
from hypothesis import given, settings, strategies as st

from puckpace.metrics import SpeedVector, aggregate, aggregate_frame, merge_all, relative_to
from puckpace.rink import NormalizedPoint
from puckpace.sequencing import PaceSample

O = NormalizedPoint(0, 0)


def sample(d, dt, ew=None, ns=None, n=None):
    ew = d if ew is None else ew
    ns = 0.0 if ns is None else ns
    return PaceSample(d, ew, ns, n if n is not None else ns, dt, "a", "b", None, None, O, O)


def test_single_sample():
    v = aggregate([("k", sample(50, 2))])["k"]
    assert v.phi_t == 25 and v.n_samples == 1


def test_time_weighting_not_mean_of_speeds():
    v = aggregate([("k", sample(50, 2)), ("k", sample(10, 8))])["k"]
    assert v.phi_t == 6
    assert v.speeds("mean")[0] == pytest.approx((25 + 1.25) / 2)


def test_empty_group_undefined():
    v = SpeedVector()
    assert v.phi_t is None and v.n_samples == 0 and not v.defined
    assert relative_to(v, v).as_tuple() == (None,) * 4


def _vec(phi_t, phi_n=None):
    n = phi_t if phi_n is None else phi_n
    return SpeedVector(phi_t, phi_t, phi_t, n, 1.0, 1)


def test_relative_examples():
    assert relative_to(_vec(10, 6.5), _vec(10, 10.0)).pct_n == pytest.approx(-35.0)
    assert relative_to(_vec(5), _vec(5)).as_tuple() == (0.0, 0.0, 0.0, 0.0)
    assert relative_to(_vec(6), _vec(5)).pct_t == pytest.approx(20.0)
    assert relative_to(_vec(6), _vec(0)).pct_t is None


pos = st.floats(0.01, 100, allow_nan=False)


@st.composite
def samples(draw):
    # rink-scale displacements; squares of sub-1e-150 ft values would underflow
    dx = draw(st.floats(-100, 100, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-100))
    dy = draw(st.floats(-80, 80, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-100))
    dt = draw(pos)
    return PaceSample(math.sqrt(dx * dx + dy * dy), abs(dy), abs(dx), max(dx, 0.0), dt, "a", "b", None, None, O, O)


@settings(max_examples=60, deadline=None)
@given(st.lists(samples(), min_size=1, max_size=40), st.randoms(use_true_random=False))
def test_merge_is_order_and_partition_independent(ss, rnd):
    whole = merge_all(SpeedVector.of(s) for s in ss)
    shuffled = list(ss)
    rnd.shuffle(shuffled)
    cut = rnd.randint(0, len(ss))
    parts = [merge_all(SpeedVector.of(s) for s in shuffled[:cut]), merge_all(SpeedVector.of(s) for s in shuffled[cut:])]
    other = parts[1].merge(parts[0])
    for a, b in zip(whole.speeds(), other.speeds()):
        assert a == pytest.approx(b, rel=1e-9)
    assert whole.n_samples == other.n_samples
    # canonical order replay is bit-exact
    assert merge_all(SpeedVector.of(s) for s in ss) == whole
    t, ew, ns, n = whole.speeds()
    assert n <= ns * (1 + 1e-12) and ns <= t * (1 + 1e-12) and ew <= t * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(samples(), min_size=1, max_size=20), st.floats(0.1, 10))
def test_scaling(ss, c):
    base = merge_all(SpeedVector.of(s) for s in ss)
    slow = merge_all(SpeedVector.of(PaceSample(s.d_total, s.d_ew, s.d_ns, s.d_n, s.dt * c, "a", "b", None, None, O, O))
                     for s in ss)
    big = merge_all(SpeedVector.of(PaceSample(s.d_total * c, s.d_ew * c, s.d_ns * c, s.d_n * c, s.dt, "a", "b", None,
                                              None, O, O)) for s in ss)
    for b, s_, g in zip(base.speeds(), slow.speeds(), big.speeds()):
        assert s_ == pytest.approx(b / c, rel=1e-9, abs=1e-12)
        assert g == pytest.approx(b * c, rel=1e-9, abs=1e-12)


def test_aggregate_frame_matches_objects(tab):
    smp = tab.samples
    got = aggregate_frame(smp, ["team_id", "zone"]).set_index(["team_id", "zone"])
    for (team, zone), grp in smp.groupby(["team_id", "zone"], observed=True):
        v = merge_all(SpeedVector(r.d_total, r.d_ew, r.d_ns, r.d_n, r.dt, 1) for r in grp.itertuples())
        row = got.loc[(team, zone)]
        assert row["n_samples"] == v.n_samples
        assert row["phi_t"] == pytest.approx(v.phi_t, rel=1e-12)
        assert row["phi_n"] == pytest.approx(v.phi_n, rel=1e-12)


def test_aggregate_frame_empty_group_and_mean(tab):
    empty = aggregate_frame(tab.samples.iloc[:0], [])
    assert empty["n_samples"].iat[0] == 0 and math.isnan(empty["phi_t"].iat[0])
    mean = aggregate_frame(tab.samples, ["zone"], "mean")
    direct = (tab.samples["d_total"] / tab.samples["dt"]).groupby(tab.samples["zone"].astype(str)).mean()
    assert list(mean["phi_t"]) == pytest.approx(list(direct.sort_index()), rel=1e-12)
    with pytest.raises(ValueError):
        aggregate_frame(tab.samples, ["zone"], "median")
