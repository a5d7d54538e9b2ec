"""Planar dynamic bicycle model with saturating lateral tire forces.

State is integrated with a single classical Runge-Kutta step per control
period. Lateral tire forces follow an arctangent curve that is linear near zero
slip and saturates at ``mu * F_z`` per axle, which is what lets the rear axle
break away and the car enter a drift. The engine force reaches the wheels
through a first-order lag whose time constant grows with the engine MOI.
"""

from dataclasses import asdict, dataclass, replace
from enum import Enum
import math

from .control import Action
from .geometry import wrap_angle

GRAVITY = 9.81
# Maps the simulator-style tire friction scalar (3.0 - 4.0 for the training car)
# onto a peak road friction coefficient.
FRICTION_SCALE = 0.3
# Drive force time constant per kg m^2 of engine MOI.
DRIVE_LAG_PER_MOI = 0.5
SLIP_SPEED_GUARD = 0.5
# Longitudinal speed floor used in tire slip kinematics.
TIRE_SPEED_FLOOR = 1.0


class DriveType(str, Enum):
    FWD = "FWD"
    AWD = "AWD"


class NonFiniteStateError(ValueError):
    """Raised when a NaN or infinity reaches the simulator."""


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1800.0
    tire_friction: float = 3.5
    engine_moi: float = 0.1
    length: float = 3.6
    width: float = 1.6
    wheelbase_front: float = 1.0
    wheelbase_rear: float = 1.45
    drive_type: DriveType = DriveType.FWD
    max_engine_force: float = 5500.0
    cornering_stiffness_front: float = 90000.0
    cornering_stiffness_rear: float = 100000.0
    drag_coefficient: float = 6.5
    yaw_inertia: float = 2700.0
    max_steer_angle: float = 0.6
    # Optional separate rear-axle friction (front/rear wear mismatch).
    tire_friction_rear: float | None = None

    def __post_init__(self):
        if isinstance(self.drive_type, str):
            object.__setattr__(self, "drive_type", DriveType(self.drive_type))
        if self.mass <= 0 or self.yaw_inertia <= 0:
            raise ValueError("mass and yaw_inertia must be positive")
        if self.wheelbase_front <= 0 or self.wheelbase_rear <= 0:
            raise ValueError("axle distances must be positive")
        for value in (self.tire_friction, self.tire_friction_rear):
            if value is not None and not 1.0 <= value <= 6.0:
                raise ValueError(f"tire_friction {value} outside [1, 6]")
        if self.engine_moi < 0 or self.max_engine_force < 0 or self.drag_coefficient < 0:
            raise ValueError("engine_moi, max_engine_force and drag_coefficient must be >= 0")
        if self.cornering_stiffness_front <= 0 or self.cornering_stiffness_rear <= 0:
            raise ValueError("cornering stiffness must be positive")
        if not 0 < self.max_steer_angle < math.pi / 2:
            raise ValueError("max_steer_angle must be in (0, pi/2)")

    @property
    def wheelbase(self) -> float:
        return self.wheelbase_front + self.wheelbase_rear

    @property
    def axle_loads(self) -> tuple[float, float]:
        """Static (front, rear) normal loads in N."""
        weight = self.mass * GRAVITY
        return (weight * self.wheelbase_rear / self.wheelbase,
                weight * self.wheelbase_front / self.wheelbase)

    @property
    def peak_friction(self) -> tuple[float, float]:
        """Peak friction coefficient of the (front, rear) axle."""
        rear = self.tire_friction if self.tire_friction_rear is None else self.tire_friction_rear
        return (FRICTION_SCALE * self.tire_friction, FRICTION_SCALE * rear)

    @property
    def max_lateral_forces(self) -> tuple[float, float]:
        (fzf, fzr), (muf, mur) = self.axle_loads, self.peak_friction
        return (muf * fzf, mur * fzr)

    @property
    def top_speed(self) -> float:
        """Full-throttle speed where drive force balances drag."""
        if self.drag_coefficient == 0:
            return math.inf
        return math.sqrt(self.max_engine_force / self.drag_coefficient)

    @property
    def drive_lag(self) -> float:
        return DRIVE_LAG_PER_MOI * self.engine_moi

    def to_dict(self) -> dict:
        data = asdict(self)
        data["drive_type"] = self.drive_type.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "VehicleParams":
        return cls(**data)

    def with_overrides(self, **changes) -> "VehicleParams":
        return replace(self, **changes)


# Four roles mirroring the training car and the three unseen test vehicles.
PRESETS = {
    "trainer": VehicleParams(),
    "light_coupe": VehicleParams(
        mass=1200.0, tire_friction=3.5, engine_moi=0.3, length=4.2, width=1.8,
        wheelbase_front=1.05, wheelbase_rear=1.45, max_engine_force=4400.0,
        cornering_stiffness_front=62000.0, cornering_stiffness_rear=70000.0,
        drag_coefficient=5.0, yaw_inertia=1800.0),
    "high_moi_compact": VehicleParams(
        mass=1000.0, tire_friction=3.5, engine_moi=1.0, length=3.8, width=1.7,
        wheelbase_front=0.95, wheelbase_rear=1.4, max_engine_force=3600.0,
        cornering_stiffness_front=52000.0, cornering_stiffness_rear=58000.0,
        drag_coefficient=4.2, yaw_inertia=1400.0),
    "heavy_awd_truck": VehicleParams(
        mass=5500.0, tire_friction=3.5, engine_moi=1.0, length=5.6, width=2.5,
        wheelbase_front=1.6, wheelbase_rear=1.9, drive_type=DriveType.AWD,
        max_engine_force=14000.0, cornering_stiffness_front=260000.0,
        cornering_stiffness_rear=300000.0, drag_coefficient=24.0, yaw_inertia=14000.0),
}


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    v_x: float = 0.0
    v_y: float = 0.0
    yaw_rate: float = 0.0
    delta: float = 0.0
    tau: float = 0.0
    # normalized drive force actually reaching the wheels (lags tau)
    drive: float = 0.0

    def speed(self) -> float:
        return math.hypot(self.v_x, self.v_y)

    def slip_angle(self) -> float:
        return slip_angle(self)

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.psi, self.v_x, self.v_y, self.yaw_rate,
                self.delta, self.tau, self.drive)


def slip_angle(state: VehicleState) -> float:
    """Angle from the heading to the velocity vector; 0 below 0.5 m/s."""
    if math.hypot(state.v_x, state.v_y) > SLIP_SPEED_GUARD:
        return math.atan2(state.v_y, state.v_x)
    return 0.0


def tire_lateral_force(slip: float, stiffness: float, max_force: float) -> float:
    """Arctangent tire curve: ``-stiffness * slip`` near zero, bounded by ``max_force``."""
    scale = 2.0 * max_force / math.pi
    return -scale * math.atan(stiffness * slip / scale)


def axle_slip_angles(v_x: float, v_y: float, yaw_rate: float, steer_rad: float,
                     params: VehicleParams) -> tuple[float, float]:
    """Slip angles of the front and rear tire contact patches."""
    u = max(v_x, TIRE_SPEED_FLOOR) if v_x >= 0 else min(v_x, -TIRE_SPEED_FLOOR)
    alpha_f = math.atan2(v_y + params.wheelbase_front * yaw_rate, u) - steer_rad
    alpha_r = math.atan2(v_y - params.wheelbase_rear * yaw_rate, u)
    if v_x < 0:
        # keep forces resisting lateral motion when rolling backwards
        alpha_f = wrap_angle(alpha_f + math.pi)
        alpha_r = wrap_angle(alpha_r + math.pi)
    return alpha_f, alpha_r


def _lateral_capacity(grip: float, drive_force: float) -> float:
    # friction circle: drive force on an axle eats into its lateral grip
    return math.sqrt(max(grip * grip - drive_force * drive_force, (0.05 * grip) ** 2))


def tire_forces(v_x: float, v_y: float, yaw_rate: float, steer_rad: float,
                params: VehicleParams, drive_front: float = 0.0,
                drive_rear: float = 0.0) -> tuple[float, float]:
    """Lateral (front, rear) tire forces in the respective wheel frames."""
    alpha_f, alpha_r = axle_slip_angles(v_x, v_y, yaw_rate, steer_rad, params)
    grip_front, grip_rear = params.max_lateral_forces
    return (tire_lateral_force(alpha_f, params.cornering_stiffness_front,
                               _lateral_capacity(grip_front, drive_front)),
            tire_lateral_force(alpha_r, params.cornering_stiffness_rear,
                               _lateral_capacity(grip_rear, drive_rear)))


def _derivatives(s, steer_rad: float, throttle: float, p: VehicleParams):
    _, _, psi, vx, vy, r, drive = s
    drive_force = drive * p.max_engine_force
    grip_front, grip_rear = p.max_lateral_forces
    if p.drive_type is DriveType.AWD:
        fdf = min(0.5 * drive_force, grip_front)
        fdr = min(0.5 * drive_force, grip_rear)
    else:
        fdf, fdr = min(drive_force, grip_front), 0.0
    fyf, fyr = tire_forces(vx, vy, r, steer_rad, p, fdf, fdr)
    cos_d, sin_d = math.cos(steer_rad), math.sin(steer_rad)
    fx_front = fdf * cos_d - fyf * sin_d
    fy_front = fdf * sin_d + fyf * cos_d
    speed = math.hypot(vx, vy)
    drag = p.drag_coefficient * speed
    ax = (fx_front + fdr - drag * vx) / p.mass + vy * r
    ay = (fy_front + fyr - drag * vy) / p.mass - vx * r
    r_dot = (p.wheelbase_front * fy_front - p.wheelbase_rear * fyr) / p.yaw_inertia
    lag = p.drive_lag
    drive_dot = (throttle - drive) / lag if lag > 0 else 0.0
    c, sn = math.cos(psi), math.sin(psi)
    return (vx * c - vy * sn, vx * sn + vy * c, r, ax, ay, r_dot, drive_dot)


def step(state: VehicleState, action: Action, params: VehicleParams, dt: float) -> VehicleState:
    """Advance ``state`` by ``dt`` seconds holding ``action`` constant.

    ``action`` uses the simulator's native ranges (steer in [-1, 1], throttle in
    [0, 1]); values outside are clipped.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    values = state.as_tuple() + (action.steer, action.throttle)
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteStateError(f"non-finite simulator input: state={state}, action={action}")

    steer = max(-1.0, min(1.0, action.steer))
    throttle = max(0.0, min(1.0, action.throttle))
    steer_rad = steer * params.max_steer_angle
    drive0 = throttle if params.drive_lag == 0 else state.drive

    s0 = (state.x, state.y, state.psi, state.v_x, state.v_y, state.yaw_rate, drive0)
    k1 = _derivatives(s0, steer_rad, throttle, params)
    s1 = tuple(a + 0.5 * dt * b for a, b in zip(s0, k1))
    k2 = _derivatives(s1, steer_rad, throttle, params)
    s2 = tuple(a + 0.5 * dt * b for a, b in zip(s0, k2))
    k3 = _derivatives(s2, steer_rad, throttle, params)
    s3 = tuple(a + dt * b for a, b in zip(s0, k3))
    k4 = _derivatives(s3, steer_rad, throttle, params)
    x, y, psi, vx, vy, r, drive = (
        a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(s0, k1, k2, k3, k4))

    nxt = VehicleState(x=x, y=y, psi=wrap_angle(psi), v_x=vx, v_y=vy, yaw_rate=r,
                       delta=steer, tau=throttle, drive=drive)
    if not all(math.isfinite(v) for v in nxt.as_tuple()):
        raise NonFiniteStateError(f"simulator diverged from {state} under {action}")
    return nxt
