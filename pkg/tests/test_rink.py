import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from puckpace.errors import ConfigError, RinkBoundaryError
from puckpace.rink import (AHL, NHL, SHL, NormalizedPoint, RinkSpec, Zone, contains_many, load_rink, normalize,
                           parse_rink_config, zone_of)


def test_normalize_identity_and_reflection():
    assert normalize(30, 10, +1) == NormalizedPoint(30, 10)
    assert normalize(30, 10, -1) == NormalizedPoint(-30, -10)


def test_point_outside_corner_arc_is_rejected():
    # inside the 200x85 bounding box but beyond the 28 ft corner arc
    assert abs(-99) <= 100 and abs(41) <= 42.5
    with pytest.raises(RinkBoundaryError):
        normalize(-99, 41, +1)


def test_bad_attack_sign():
    with pytest.raises(ValueError):
        normalize(0, 0, 0)


@pytest.mark.parametrize("x, zone", [(0, Zone.NZ), (-30, Zone.DZ), (25, Zone.NZ), (-25, Zone.NZ), (25.0001, Zone.OZ)])
def test_zone_boundaries(x, zone):
    assert zone_of(NormalizedPoint(x, 0), NHL) is zone


coord = st.floats(-100, 100, allow_nan=False)


@given(coord, st.floats(-42.5, 42.5, allow_nan=False), st.sampled_from([1, -1]))
def test_normalize_involution(x, y, s):
    if not NHL.contains(x, y):
        return
    p = normalize(x, y, s)
    q = normalize(p.x_north, p.y_east, s)
    assert (q.x_north, q.y_east) == (x, y)


@given(coord)
def test_zone_mirror(x):
    assert zone_of(NormalizedPoint(-x, 0)) is zone_of(NormalizedPoint(x, 0)).mirror()


def _chord(spec, x):
    """Upper in-rink y at abscissa x, found by bisection on the predicate."""
    lo, hi = 0.0, spec.half_width + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if contains_many(spec, np.array([x]), np.array([mid]), eps=0.0)[0]:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return lo


@pytest.mark.parametrize("spec", [NHL, SHL], ids=["nhl", "shl"])
def test_area_matches_point_predicate(spec):
    # integrate the predicate's own chord height; the kink at the arc start is a breakpoint
    cx = spec.half_length - spec.corner_radius_ft
    area, _err = integrate.quad(lambda x: 4 * _chord(spec, x), 0, spec.half_length, points=[cx],
                                epsabs=0, epsrel=1e-12, limit=200)
    assert abs(area - spec.area()) / spec.area() < 1e-9


def test_nhl_area_closed_form():
    assert NHL.area() == pytest.approx(200 * 85 - (4 - math.pi) * 28 ** 2, rel=1e-15)


def test_presets():
    assert load_rink("nhl") is NHL
    assert load_rink("AHL") is AHL
    assert (SHL.width_ft, SHL.blue_line_offset_ft) == (100.0, 29.0)
    # SHL goal line sits 6 ft closer to the blue line than on the NHL rink
    assert (SHL.goal_x - SHL.blue_line_offset_ft) == (NHL.goal_x - NHL.blue_line_offset_ft) - 6


def test_rink_config_file(tmp_path):
    p = tmp_path / "wide.rink"
    p.write_text("preset = shl\ncorner_radius_ft = 20  # rounder\n")
    spec = load_rink(p)
    assert spec.name == "wide" and spec.corner_radius_ft == 20 and spec.width_ft == 100
    with pytest.raises(ConfigError):
        parse_rink_config("colour = red")
    with pytest.raises(ConfigError):
        load_rink("no-such-preset")


def test_spec_invariants():
    with pytest.raises(ConfigError):
        RinkSpec(blue_line_offset_ft=100)
    with pytest.raises(ConfigError):
        RinkSpec(corner_radius_ft=50)
    with pytest.raises(ConfigError):
        RinkSpec(width_ft=-1)
