from hypothesis import given, strategies as st
import pytest

from driftsac.control import (INITIAL_ACTION, Action, ControlDiagnostics, SmoothingGains, map_raw,
                              smooth, unmap)

unit = st.floats(-1.0, 1.0)


def test_map_raw_midpoint_and_endpoints():
    assert map_raw(0.0, 0.0) == Action(0.0, 0.8)
    assert map_raw(1.0, 1.0) == Action(0.8, 1.0)
    a = map_raw(-1.0, -1.0)
    assert a.steer == pytest.approx(-0.8, rel=1e-12)
    assert a.throttle == pytest.approx(0.6, rel=1e-12)


def test_out_of_range_is_clamped_and_counted():
    diag = ControlDiagnostics()
    a = map_raw(1.7, -3.0, diag)
    assert a.steer == 0.8 and a.throttle == pytest.approx(0.6)
    assert diag.clamped == 2


def test_initial_action():
    assert INITIAL_ACTION == Action(0.0, 0.6)


def test_smooth_examples():
    g = SmoothingGains()
    out = smooth(Action(0.8, 1.0), Action(0.0, 0.6), g)
    assert out.steer == pytest.approx(0.08, rel=1e-12)
    assert out.throttle == pytest.approx(0.72, rel=1e-12)
    same = Action(0.3, 0.7)
    out = smooth(same, same, g)
    assert out.steer == pytest.approx(0.3, rel=1e-12)
    assert out.throttle == pytest.approx(0.7, rel=1e-12)


def test_smoothing_disabled_is_identity():
    a = Action(-0.5, 0.9)
    assert smooth(a, Action(0.8, 0.6), enabled=False) == a


@pytest.mark.parametrize("kw", [dict(k1_steer=0.2), dict(k1_throttle=1.2, k2_throttle=-0.2)])
def test_gains_validated(kw):
    with pytest.raises(ValueError):
        SmoothingGains(**kw)


@given(unit, unit)
def test_unmap_inverts_map(u1, u2):
    back = unmap(map_raw(u1, u2))
    assert back[0] == pytest.approx(u1, abs=1e-12)
    assert back[1] == pytest.approx(u2, abs=1e-12)


@given(unit, unit, unit, unit)
def test_smooth_stays_in_range_and_bounds_steer_rate(u1, u2, p1, p2):
    prev = map_raw(p1, p2)
    out = smooth(map_raw(u1, u2), prev)
    assert -0.8 <= out.steer <= 0.8
    assert 0.6 <= out.throttle <= 1.0
    assert abs(out.steer - prev.steer) <= 0.16 + 1e-12
