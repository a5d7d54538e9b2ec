"""Episode environment: couples the simulator, the reference and the reward."""

from dataclasses import dataclass, field
import math

import numpy as np

from .control import INITIAL_ACTION, ControlDiagnostics, SmoothingGains, map_raw, smooth
from .evaluation import RolloutLog
from .guidance import (ARRIVED_THRESHOLD, CONTROL_DT, LOOKAHEAD_POINTS, LOOKAHEAD_SPACING,
                       ABLATED_DIM, FULL_DIM, ErrorState, TerminalKind, VfgParams,
                       build_observation, error_state, terminal_check)
from .reward import RewardParams, total_reward
from .track import ReferenceSource, ReferenceTrajectory, Track, lookahead, nearest_point
from .vehicle import VehicleParams, VehicleState, step as vehicle_step


@dataclass
class EnvConfig:
    dt: float = CONTROL_DT
    smoothing: bool = True
    gains: SmoothingGains = field(default_factory=SmoothingGains)
    ablate_slip: bool = False
    # zero the slip and lateral-velocity errors (used with a rough reference)
    mask_slip_errors: bool = False
    vfg: VfgParams = field(default_factory=VfgParams)
    reward: RewardParams = field(default_factory=RewardParams)
    spawn_speed: float = 10.0
    max_steps: int = 6000
    # stop an episode that gained less than stall_distance metres in stall_steps
    stall_steps: int = 250
    stall_distance: float = 1.0
    arrived_threshold: float = ARRIVED_THRESHOLD
    lookahead_points: int = LOOKAHEAD_POINTS
    lookahead_spacing: float = LOOKAHEAD_SPACING

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.spawn_speed < 0 or self.max_steps < 1 or self.stall_steps < 1:
            raise ValueError("invalid episode limits")

    @property
    def obs_dim(self) -> int:
        return ABLATED_DIM if self.ablate_slip else FULL_DIM


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    kind: TerminalKind
    # bootstrap mask for the learner: only failures end the value stream
    done: bool
    info: dict


class DriftEnv:
    def __init__(self, track: Track, reference: ReferenceTrajectory, params: VehicleParams,
                 config: EnvConfig | None = None):
        if reference.is_loop != track.is_loop:
            raise ValueError("reference and track disagree on being a loop")
        self.track = track
        self.reference = reference
        self.params = params
        self.config = config or EnvConfig()
        self.diagnostics = ControlDiagnostics()
        self.state: VehicleState | None = None
        self.log: RolloutLog | None = None

    @property
    def obs_dim(self) -> int:
        return self.config.obs_dim

    def reset(self, lateral_offset: float = 0.0, record: bool = False) -> np.ndarray:
        ref = self.reference.point(0)
        course = ref.course
        x = ref.x - math.sin(course) * lateral_offset
        y = ref.y + math.cos(course) * lateral_offset
        a0 = INITIAL_ACTION
        self.state = VehicleState(x=x, y=y, psi=course, v_x=self.config.spawn_speed, v_y=0.0,
                                  yaw_rate=0.0, delta=a0.steer, tau=a0.throttle, drive=a0.throttle)
        self.a_prev = a0
        self.steps = 0
        self.t = 0.0
        self.index = 0
        self.track_index = 0
        self.progress = 0.0
        self.progress_history = [0.0]
        self.errors: ErrorState | None = None
        self.kind = TerminalKind.RUNNING
        self.log = None
        if record:
            self.log = RolloutLog(
                dt=self.config.dt, track_name=self.track.name,
                reference_relative=self.reference.source is not ReferenceSource.ROUGH_CENTERLINE)
        return self._observe()

    def _observe(self) -> np.ndarray:
        st = self.state
        self.index, _ = nearest_point(self.reference, (st.x, st.y), self.index)
        ref = self.reference.point(self.index)
        errs = error_state(st, self.errors, ref, self.config.vfg, self.config.dt)
        if self.config.mask_slip_errors:
            errs = errs.without_slip_terms()
        self.errors = errs
        look = lookahead(self.reference, self.index, self.config.lookahead_points,
                         self.config.lookahead_spacing)
        return build_observation(st, errs, look, self.config.ablate_slip)

    def _advance_progress(self) -> None:
        i, _ = self.track.nearest((self.state.x, self.state.y), self.track_index)
        s = self.track.s
        ds = float(s[i] - s[self.track_index])
        if self.track.is_loop:
            half = 0.5 * self.track.total_length
            if ds > half:
                ds -= self.track.total_length
            elif ds < -half:
                ds += self.track.total_length
        self.track_index = i
        self.progress += ds

    def step(self, u) -> StepResult:
        """Apply a squashed policy output ``u`` in [-1, 1]^2 for one control period."""
        if self.state is None or self.kind is not TerminalKind.RUNNING:
            raise RuntimeError("call reset() before stepping")
        cfg = self.config
        a_net = map_raw(float(u[0]), float(u[1]), self.diagnostics)
        action = smooth(a_net, self.a_prev, cfg.gains, enabled=cfg.smoothing)
        self.state = vehicle_step(self.state, action, self.params, cfg.dt)
        self.a_prev = action
        self.steps += 1
        self.t += cfg.dt
        self._advance_progress()
        obs = self._observe()
        st, errs = self.state, self.errors
        reward = total_reward(st.speed(), abs(errs.e_y), math.degrees(errs.e_psi),
                              math.degrees(errs.e_beta), cfg.reward,
                              include_slip=not cfg.ablate_slip)
        kind = terminal_check(st, self.track, self.reference, cfg.arrived_threshold,
                              hint=self.track_index, progress=self.progress)
        self.progress_history.append(self.progress)
        if kind is TerminalKind.RUNNING:
            if self.steps >= cfg.max_steps:
                kind = TerminalKind.TIMEOUT
            elif self.steps >= cfg.stall_steps:
                gained = self.progress - self.progress_history[-1 - cfg.stall_steps]
                if gained < cfg.stall_distance:
                    kind = TerminalKind.TIMEOUT
        self.kind = kind
        if self.log is not None:
            self.log.append(self.t, st, action, errs, reward, float(self.reference.s[self.index]))
            self.log.terminal = kind.value
        info = {"action": action, "speed": st.speed(), "progress": self.progress}
        return StepResult(obs, reward, kind, kind.is_failure, info)
