import math

from hypothesis import given, strategies as st
import pytest

from driftsac.reward import RewardParams, WEIGHT_SETS, partial_angle, partial_ey, total_reward

P = RewardParams()


def test_defaults():
    assert (P.k1, P.k2, P.w_ey, P.w_epsi, P.w_ebeta, P.v_min, P.low_speed_factor) == \
        (0.5, 0.1, 40.0, 40.0, 20.0, 6.0, 0.5)
    assert WEIGHT_SETS["default"] == (40.0, 40.0, 20.0)


@pytest.mark.parametrize("field", ["k1", "k2", "w_ey", "v_min", "low_speed_factor"])
def test_params_must_be_positive(field):
    with pytest.raises(ValueError):
        RewardParams(**{field: 0.0})


def test_partial_ey_values():
    assert partial_ey(0.0) == 1.0
    assert partial_ey(0.5) == pytest.approx(0.7788007830714049, rel=1e-12)
    assert partial_ey(10.0) == pytest.approx(0.006737946999085467, rel=1e-12)
    assert partial_ey(10.0) > 0


def test_partial_angle_values():
    assert partial_angle(0.0) == 1.0
    assert partial_angle(90.0) == pytest.approx(-1.2340980408667956e-4, rel=1e-12)
    assert partial_angle(-90.0) == pytest.approx(-1.2340980408667956e-4, rel=1e-12)
    assert partial_angle(-135.0) == pytest.approx(-0.011108996538242306, rel=1e-12)


def test_jump_at_ninety_degrees():
    below = partial_angle(math.nextafter(90.0, 0.0))
    at = partial_angle(90.0)
    assert below > 0 > at
    assert below - at == pytest.approx(2 * math.exp(-9.0), rel=1e-9)


def test_total_reward_examples():
    assert total_reward(0.0, 3.0, 40.0, -20.0) == 0.0
    assert total_reward(10.0, 0.0, 0.0, 0.0) == pytest.approx(1000.0, rel=1e-12)
    assert total_reward(5.0, 0.0, 0.0, 0.0) == pytest.approx(250.0, rel=1e-12)


def test_no_slip_term_when_ablated():
    assert total_reward(10.0, 0.0, 0.0, 0.0, include_slip=False) == pytest.approx(800.0)


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_partial_ey_decreasing(a, b):
    lo, hi = sorted((a, b))
    assert partial_ey(lo) >= partial_ey(hi)
    assert partial_ey(a) <= 1.0


@given(st.floats(-89.999, 89.999), st.floats(-89.999, 89.999))
def test_angle_positive_branch_decreasing_in_magnitude(a, b):
    small, big = sorted((a, b), key=abs)
    assert partial_angle(small) >= partial_angle(big) > 0


@given(st.floats(-180.0, 180.0), st.floats(-180.0, 180.0))
def test_angle_reward_symmetric_and_bounded(x, _):
    assert partial_angle(x) == pytest.approx(partial_angle(-x), rel=1e-12)
    assert -1.0 <= partial_angle(x) <= 1.0


@given(st.floats(6.0, 60.0), st.floats(1.0, 5.0), st.floats(0, 20), st.floats(-180, 180),
       st.floats(-180, 180))
def test_speed_scaling_above_threshold(v, c, ey, epsi, ebeta):
    base = total_reward(v, ey, epsi, ebeta)
    assert total_reward(c * v, ey, epsi, ebeta) == pytest.approx(c * base, rel=1e-9, abs=1e-9)


@given(st.floats(0.0, 60.0), st.floats(0, 20), st.floats(-180, 180), st.floats(-180, 180))
def test_sign_follows_weighted_sum(v, ey, epsi, ebeta):
    weighted = 40 * partial_ey(ey) + 40 * partial_angle(epsi) + 20 * partial_angle(ebeta)
    r = total_reward(v, ey, epsi, ebeta)
    if v > 0:
        assert (r >= 0) == (weighted >= 0)
