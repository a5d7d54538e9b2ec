"""Action mapping and smoothing.

The policy emits a squashed pair ``u`` in [-1, 1]^2. ``map_raw`` turns it into a
deployable command inside the restricted ranges (steer in [-0.8, 0.8], throttle
in [0.6, 1.0]); ``smooth`` blends the new command with the previously deployed
one, channel by channel.
"""

from dataclasses import dataclass

STEER_LIMIT = 0.8
THROTTLE_MIN = 0.6
THROTTLE_MAX = 1.0


@dataclass(frozen=True)
class Action:
    steer: float
    throttle: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.steer, self.throttle)


# neutral steering, minimum allowed throttle
INITIAL_ACTION = Action(steer=0.0, throttle=THROTTLE_MIN)


@dataclass(frozen=True)
class SmoothingGains:
    k1_steer: float = 0.1
    k1_throttle: float = 0.3
    k2_steer: float = 0.9
    k2_throttle: float = 0.7

    def __post_init__(self):
        for name in ("k1_steer", "k1_throttle", "k2_steer", "k2_throttle"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if abs(self.k1_steer + self.k2_steer - 1.0) > 1e-12:
            raise ValueError("steering gains must sum to 1")
        if abs(self.k1_throttle + self.k2_throttle - 1.0) > 1e-12:
            raise ValueError("throttle gains must sum to 1")


@dataclass
class ControlDiagnostics:
    """Counts raw policy outputs that had to be clamped into [-1, 1]."""

    clamped: int = 0
    calls: int = 0


def _clamp_unit(value: float, diagnostics: ControlDiagnostics | None) -> float:
    if value > 1.0 or value < -1.0:
        if diagnostics is not None:
            diagnostics.clamped += 1
        return max(-1.0, min(1.0, value))
    return value


def map_raw(u1: float, u2: float, diagnostics: ControlDiagnostics | None = None) -> Action:
    """Map a squashed policy output pair to a deployable action."""
    if diagnostics is not None:
        diagnostics.calls += 1
    u1 = _clamp_unit(float(u1), diagnostics)
    u2 = _clamp_unit(float(u2), diagnostics)
    steer = STEER_LIMIT * u1
    throttle = THROTTLE_MIN + (THROTTLE_MAX - THROTTLE_MIN) * (u2 + 1.0) / 2.0
    return Action(steer=steer, throttle=throttle)


def smooth(a_net: Action, a_prev: Action, gains: SmoothingGains = SmoothingGains(),
           enabled: bool = True) -> Action:
    """Blend the network action with the previously deployed one.

    With ``enabled=False`` (the no-smoothing ablation) ``a_net`` is returned as is.
    """
    if not enabled:
        return a_net
    return Action(
        steer=gains.k1_steer * a_net.steer + gains.k2_steer * a_prev.steer,
        throttle=gains.k1_throttle * a_net.throttle + gains.k2_throttle * a_prev.throttle,
    )


def smooth_raw(u: tuple[float, float], u_prev: tuple[float, float],
               gains: SmoothingGains = SmoothingGains()) -> tuple[float, float]:
    """Smoothing applied to squashed outputs, for the smooth-before-mapping variant."""
    return (gains.k1_steer * u[0] + gains.k2_steer * u_prev[0],
            gains.k1_throttle * u[1] + gains.k2_throttle * u_prev[1])


def unmap(action: Action) -> tuple[float, float]:
    """Inverse of :func:`map_raw` for in-range actions."""
    return (action.steer / STEER_LIMIT,
            2.0 * (action.throttle - THROTTLE_MIN) / (THROTTLE_MAX - THROTTLE_MIN) - 1.0)
