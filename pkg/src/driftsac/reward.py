"""Partial tracking rewards and the speed-weighted total."""

from dataclasses import dataclass
import math


@dataclass(frozen=True)
class RewardParams:
    k1: float = 0.5
    k2: float = 0.1
    w_ey: float = 40.0
    w_epsi: float = 40.0
    w_ebeta: float = 20.0
    v_min: float = 6.0
    low_speed_factor: float = 0.5

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"reward parameter {name}={value} must be positive")


# Alternative weight sets tried for (w_ey, w_epsi, w_ebeta).
WEIGHT_SETS = {
    "small": (4.0, 4.0, 2.0),
    "flat": (20.0, 20.0, 20.0),
    "default": (40.0, 40.0, 20.0),
    "large": (400.0, 400.0, 200.0),
}


def partial_ey(e_y: float, p: RewardParams = RewardParams()) -> float:
    """exp(-k1 |e_y|), with e_y in metres."""
    return math.exp(-p.k1 * abs(e_y))


def partial_angle(x: float, p: RewardParams = RewardParams()) -> float:
    """Angle reward in degrees; turns negative from +/-90 degrees outwards."""
    if x >= 90.0:
        return -math.exp(-p.k2 * (180.0 - x))
    if x <= -90.0:
        return -math.exp(-p.k2 * (180.0 + x))
    return math.exp(-p.k2 * abs(x))


def total_reward(v: float, e_y: float, e_psi_deg: float, e_beta_deg: float,
                 p: RewardParams = RewardParams(), include_slip: bool = True) -> float:
    """Speed times the weighted partial rewards, halved below ``v_min``.

    ``include_slip=False`` drops the slip term (no-slip ablation).
    """
    weighted = p.w_ey * partial_ey(e_y, p) + p.w_epsi * partial_angle(e_psi_deg, p)
    if include_slip:
        weighted += p.w_ebeta * partial_angle(e_beta_deg, p)
    r = v * weighted
    if v < p.v_min:
        r *= p.low_speed_factor
    return r
