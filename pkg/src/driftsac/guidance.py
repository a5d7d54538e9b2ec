"""Vector field guidance, tracking errors, observation assembly and terminal checks."""

from dataclasses import astuple, dataclass, fields
from enum import Enum
import math

import numpy as np

from .geometry import angle_diff, to_body_frame, wrap_angle
from .track import RefPoint, ReferenceTrajectory, Track
from .vehicle import VehicleState

OFF_TRACK_DISTANCE = 15.0
ARRIVED_THRESHOLD = 5.0
LOOKAHEAD_POINTS = 10
LOOKAHEAD_SPACING = 2.0
CONTROL_DT = 0.02

# Observation scale table. Derivative channels use the scale of their base
# channel per second.
DISTANCE_SCALE = 15.0
ANGLE_SCALE = math.pi
VELOCITY_SCALE = 40.0
NORMALIZATION = {
    "delta": 1.0,
    "tau": 1.0,
    "e_y": DISTANCE_SCALE,
    "e_y_dot": DISTANCE_SCALE,
    "e_psi": ANGLE_SCALE,
    "e_psi_dot": ANGLE_SCALE,
    "e_beta": ANGLE_SCALE,
    "e_beta_dot": ANGLE_SCALE,
    "e_vx": VELOCITY_SCALE,
    "e_vx_dot": VELOCITY_SCALE,
    "e_vy": VELOCITY_SCALE,
    "e_vy_dot": VELOCITY_SCALE,
    "look_x": DISTANCE_SCALE,
    "look_y": DISTANCE_SCALE,
    "look_beta": ANGLE_SCALE,
}
FULL_DIM = 2 + 10 + 3 * LOOKAHEAD_POINTS
ABLATED_DIM = 2 + 8 + 2 * LOOKAHEAD_POINTS


@dataclass(frozen=True)
class VfgParams:
    k: float = 0.1
    psi_inf: float = math.pi / 2

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if not 0 < self.psi_inf <= math.pi / 2:
            raise ValueError("psi_inf must lie in (0, pi/2]")


@dataclass(frozen=True)
class ErrorState:
    e_y: float = 0.0
    e_y_dot: float = 0.0
    e_psi: float = 0.0
    e_psi_dot: float = 0.0
    e_beta: float = 0.0
    e_beta_dot: float = 0.0
    e_vx: float = 0.0
    e_vx_dot: float = 0.0
    e_vy: float = 0.0
    e_vy_dot: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def without_slip_terms(self) -> "ErrorState":
        """Copy with the slip and lateral-velocity channels zeroed."""
        return ErrorState(self.e_y, self.e_y_dot, self.e_psi, self.e_psi_dot, 0.0, 0.0,
                          self.e_vx, self.e_vx_dot, 0.0, 0.0)


ERROR_FIELDS = tuple(f.name for f in fields(ErrorState))


def side_flag(e_y_signed: float) -> float:
    """Direction of the guidance correction for a signed cross-track error.

    Headings here are counter-clockwise, so a car left of the path (positive
    offset) must be steered to a smaller heading, hence -1.
    """
    return -1.0 if e_y_signed > 0 else 1.0


def desired_heading(psi_ref: float, e_y: float, side: float, vfg: VfgParams = VfgParams()) -> float:
    """Desired heading: reference heading bent towards the path by up to ``psi_inf``.

    ``e_y`` is the unsigned cross-track distance; ``side`` (+1 or -1) carries
    the direction.
    """
    return wrap_angle(side * vfg.psi_inf * (2.0 / math.pi) * math.atan(vfg.k * e_y) + psi_ref)


def signed_cross_track(state: VehicleState, ref: RefPoint) -> float:
    """Offset of the car from ``ref`` across the reference course, left positive."""
    course = ref.course
    dx, dy = state.x - ref.x, state.y - ref.y
    return math.cos(course) * dy - math.sin(course) * dx


def error_state(state: VehicleState, prev: ErrorState | None, ref: RefPoint,
                vfg: VfgParams = VfgParams(), dt: float = CONTROL_DT) -> ErrorState:
    """Tracking errors against the nearest reference point ``ref``.

    ``e_y`` is signed (left positive). Derivatives are one-step backward
    differences, with angle differences wrapped; all zero when ``prev`` is None.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    e_y = signed_cross_track(state, ref)
    psi_d = desired_heading(ref.psi_ref, abs(e_y), side_flag(e_y), vfg)
    e_psi = angle_diff(state.psi, psi_d)
    e_beta = angle_diff(state.slip_angle(), ref.beta_ref)
    e_vx = state.v_x - ref.v_x_ref
    e_vy = state.v_y - ref.v_y_ref
    if prev is None:
        return ErrorState(e_y, 0.0, e_psi, 0.0, e_beta, 0.0, e_vx, 0.0, e_vy, 0.0)
    return ErrorState(
        e_y, (e_y - prev.e_y) / dt,
        e_psi, angle_diff(e_psi, prev.e_psi) / dt,
        e_beta, angle_diff(e_beta, prev.e_beta) / dt,
        e_vx, (e_vx - prev.e_vx) / dt,
        e_vy, (e_vy - prev.e_vy) / dt,
    )


_ERROR_SCALES = np.array([NORMALIZATION[name] for name in ERROR_FIELDS])
_SLIP_CHANNELS = (ERROR_FIELDS.index("e_beta"), ERROR_FIELDS.index("e_beta_dot"))


def build_observation(state: VehicleState, errs: ErrorState, look: list[RefPoint],
                      ablate_slip: bool = False) -> np.ndarray:
    """Assemble the normalized observation vector (42 entries, 30 when ablated)."""
    if len(look) != LOOKAHEAD_POINTS:
        raise ValueError(f"expected {LOOKAHEAD_POINTS} lookahead points, got {len(look)}")
    err = errs.as_array() / _ERROR_SCALES
    px = np.array([p.x for p in look])
    py = np.array([p.y for p in look])
    bx, by = to_body_frame(px, py, state.x, state.y, state.psi)
    bx = bx / NORMALIZATION["look_x"]
    by = by / NORMALIZATION["look_y"]
    controls = np.array([state.delta, state.tau])
    if ablate_slip:
        err = np.delete(err, _SLIP_CHANNELS)
        tail = np.column_stack([bx, by]).ravel()
    else:
        beta = np.array([p.beta_ref for p in look]) / NORMALIZATION["look_beta"]
        tail = np.column_stack([bx, by, beta]).ravel()
    obs = np.concatenate([controls, err, tail])
    if not np.all(np.isfinite(obs)):
        raise ValueError(f"non-finite observation: {obs}")
    return obs


class TerminalKind(str, Enum):
    RUNNING = "Running"
    COLLISION = "Collision"
    ARRIVAL = "Arrival"
    OFF_TRACK = "OffTrack"
    # episode cut short by the environment (time limit or no progress)
    TIMEOUT = "Timeout"

    @property
    def is_failure(self) -> bool:
        return self in (TerminalKind.COLLISION, TerminalKind.OFF_TRACK)


def terminal_check(state: VehicleState, track: Track, traj: ReferenceTrajectory,
                   arrived_threshold: float = ARRIVED_THRESHOLD, hint: int | None = None,
                   progress: float | None = None) -> TerminalKind:
    """Classify the current state.

    ``progress`` is the distance covered along the track so far; loops count as
    arrived once it reaches one lap.
    """
    i, offset = track.nearest((state.x, state.y), hint)
    cx, cy = track.centerline[i]
    if math.hypot(state.x - cx, state.y - cy) > OFF_TRACK_DISTANCE:
        return TerminalKind.OFF_TRACK
    if abs(offset) > track.half_width:
        return TerminalKind.COLLISION
    if traj.is_loop:
        if progress is not None and progress >= traj.total_length:
            return TerminalKind.ARRIVAL
        return TerminalKind.RUNNING
    ex, ey = traj.x[-1], traj.y[-1]
    if math.hypot(state.x - ex, state.y - ey) <= arrived_threshold:
        return TerminalKind.ARRIVAL
    # crossing the finish line anywhere inside the band also counts
    end_heading = traj.psi[-1] + traj.beta[-1]
    past = math.cos(end_heading) * (state.x - ex) + math.sin(end_heading) * (state.y - ey)
    if i == len(track.centerline) - 1 and past > 0:
        return TerminalKind.ARRIVAL
    return TerminalKind.RUNNING
