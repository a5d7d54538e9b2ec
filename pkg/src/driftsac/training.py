"""Episode runner, the collect-then-update training loop and the two-stage curriculum."""

from dataclasses import dataclass
import csv
import io
import logging
import math
from pathlib import Path

import numpy as np

from .env import DriftEnv, EnvConfig
from .evaluation import RolloutLog
from .guidance import TerminalKind
from .sac import ReplayBuffer, SacAgent
from .track import ReferenceTrajectory, Track, scripted_expert_reference
from .vehicle import VehicleParams

log = logging.getLogger(__name__)

EPISODE_COLUMNS = ("episode", "stage", "track", "steps", "return", "avg_speed",
                   "avg_abs_epsi_deg", "terminal", "updates")
EVAL_COLUMNS = ("episode", "stage", "track", "steps", "return", "avg_speed",
                "avg_abs_epsi_deg", "terminal")


@dataclass
class EpisodeStats:
    steps: int
    ret: float
    avg_speed: float
    avg_abs_epsi_deg: float
    terminal: TerminalKind
    rollout: RolloutLog | None = None


def run_episode(env: DriftEnv, policy, buffer: ReplayBuffer | None = None,
                lateral_offset: float = 0.0, record: bool = False) -> EpisodeStats:
    """Roll one episode. ``policy(obs) -> u``; transitions go to ``buffer`` if given."""
    obs = env.reset(lateral_offset=lateral_offset, record=record)
    ret = 0.0
    speed_sum = 0.0
    epsi_sum = 0.0
    while True:
        u = policy(obs)
        res = env.step(u)
        if buffer is not None:
            buffer.add(obs, u, res.reward, res.obs, res.done)
        ret += res.reward
        speed_sum += res.info["speed"]
        epsi_sum += abs(env.errors.e_psi)
        obs = res.obs
        if res.kind is not TerminalKind.RUNNING:
            break
    n = env.steps
    return EpisodeStats(n, ret, speed_sum / n, math.degrees(epsi_sum / n), res.kind, env.log)


def agent_policy(agent: SacAgent, deterministic: bool):
    def act(obs):
        u, _ = agent.sample_action(obs, deterministic=deterministic)
        return u
    return act


def random_policy(rng: np.random.Generator):
    def act(obs):
        return rng.uniform(-1.0, 1.0, size=2)
    return act


@dataclass
class CurriculumConfig:
    episodes: int = 300
    # randomize vehicle friction and mass each episode
    randomize: bool = False
    friction_range: tuple[float, float] = (3.0, 4.0)
    mass_range: tuple[float, float] = (1700.0, 1900.0)
    eval_every: int = 20
    checkpoint_every: int = 0

    def __post_init__(self):
        self.friction_range = tuple(float(v) for v in self.friction_range)
        self.mass_range = tuple(float(v) for v in self.mass_range)
        if self.episodes < 0 or self.eval_every < 0 or self.checkpoint_every < 0:
            raise ValueError("episode counts must be non-negative")
        lo, hi = self.friction_range
        if not 1.0 <= lo <= hi <= 6.0:
            raise ValueError("friction range must lie within [1, 6]")
        lo, hi = self.mass_range
        if not 0 < lo <= hi:
            raise ValueError("mass range must be positive and ordered")


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


class Trainer:
    """Owns the learner, its buffer and the episode bookkeeping for one run.

    ``streams`` is a mapping of named generators (``exploration``, ``update``,
    ``replay``, ``curriculum``) so runs are reproducible from one root seed.
    """

    def __init__(self, agent: SacAgent, env_config: EnvConfig, base_params: VehicleParams,
                 streams: dict):
        if agent.obs_dim != env_config.obs_dim:
            raise ValueError(f"agent expects {agent.obs_dim}-dim observations, "
                             f"environment produces {env_config.obs_dim}")
        self.agent = agent
        self.env_config = env_config
        self.base_params = base_params
        self.rng_curriculum = streams["curriculum"]
        cfg = agent.config
        self.buffer = ReplayBuffer(cfg.buffer_capacity, agent.obs_dim, streams["replay"])
        self.episode = 0
        self.episode_rows: list = []
        self.eval_rows: list = []
        self._references: dict = {}

    def reference_for(self, track: Track) -> ReferenceTrajectory:
        key = id(track)
        if key not in self._references:
            self._references[key] = (track, scripted_expert_reference(track, self.base_params))
        return self._references[key][1]

    def _episode_params(self, cur: CurriculumConfig) -> VehicleParams:
        if not cur.randomize:
            return self.base_params
        friction = float(self.rng_curriculum.uniform(*cur.friction_range))
        mass = float(self.rng_curriculum.uniform(*cur.mass_range))
        return self.base_params.with_overrides(tire_friction=friction, mass=mass)

    def train_episode(self, track: Track, params: VehicleParams, stage: int) -> EpisodeStats:
        env = DriftEnv(track, self.reference_for(track), params, self.env_config)
        stats = run_episode(env, agent_policy(self.agent, deterministic=False), self.buffer)
        self.episode += 1
        cfg = self.agent.config
        n_updates = 0
        if len(self.buffer) >= max(cfg.update_threshold, cfg.batch_size):
            n_updates = cfg.updates_per_trigger or stats.steps
            for _ in range(n_updates):
                self.agent.update(self.buffer.sample(cfg.batch_size))
        self.episode_rows.append((self.episode, stage, track.name, stats.steps, stats.ret,
                                  stats.avg_speed, stats.avg_abs_epsi_deg, stats.terminal.value,
                                  n_updates))
        return stats

    def train_episode_every_step(self, track: Track, params: VehicleParams,
                                 stage: int) -> EpisodeStats:
        """Variant that performs one update after every environment step."""
        env = DriftEnv(track, self.reference_for(track), params, self.env_config)
        cfg = self.agent.config
        n_updates = 0
        buffer, agent = self.buffer, self.agent
        threshold = max(cfg.update_threshold, cfg.batch_size)

        class _Collect:
            def add(self, *t):
                nonlocal n_updates
                buffer.add(*t)
                if len(buffer) >= threshold:
                    agent.update(buffer.sample(cfg.batch_size))
                    n_updates += 1

        stats = run_episode(env, agent_policy(agent, deterministic=False), _Collect())
        self.episode += 1
        self.episode_rows.append((self.episode, stage, track.name, stats.steps, stats.ret,
                                  stats.avg_speed, stats.avg_abs_epsi_deg, stats.terminal.value,
                                  n_updates))
        return stats

    def evaluate(self, track: Track, stage: int) -> EpisodeStats:
        """Deterministic rollout with the base vehicle; leaves agent and buffer untouched."""
        env = DriftEnv(track, self.reference_for(track), self.base_params, self.env_config)
        stats = run_episode(env, agent_policy(self.agent, deterministic=True))
        self.eval_rows.append((self.episode, stage, track.name, stats.steps, stats.ret,
                               stats.avg_speed, stats.avg_abs_epsi_deg, stats.terminal.value))
        return stats

    def run_stage(self, stage: int, tracks: list[Track], cur: CurriculumConfig,
                  eval_track: Track | None = None, checkpoint_dir: Path | None = None,
                  progress=None) -> None:
        """Train ``cur.episodes`` episodes, picking a track uniformly per episode."""
        if not tracks:
            raise ValueError("no training tracks")
        eval_track = eval_track or tracks[0]
        step_fn = (self.train_episode_every_step if self.agent.config.update_every_step
                   else self.train_episode)
        if cur.eval_every:
            self.evaluate(eval_track, stage)
        for k in range(cur.episodes):
            if len(tracks) == 1:
                track = tracks[0]
            else:
                track = tracks[int(self.rng_curriculum.integers(len(tracks)))]
            params = self._episode_params(cur)
            stats = step_fn(track, params, stage)
            if progress is not None:
                progress(self.episode, stats)
            if cur.eval_every and (k + 1) % cur.eval_every == 0:
                self.evaluate(eval_track, stage)
            if checkpoint_dir is not None and cur.checkpoint_every \
                    and (k + 1) % cur.checkpoint_every == 0:
                self.save_checkpoint(Path(checkpoint_dir) / f"stage{stage}_ep{self.episode}.ckpt",
                                     stage)

    def save_checkpoint(self, path, stage: int) -> None:
        extra = {"stage": stage, "episode": self.episode,
                 "obs_dim": self.agent.obs_dim,
                 "ablate_slip": self.env_config.ablate_slip,
                 "curriculum_rng": self.rng_curriculum.bit_generator.state,
                 "replay_rng": self.buffer.rng.bit_generator.state}
        self.agent.save(path, extra)

    def restore_counters(self, extra: dict) -> None:
        self.episode = int(extra.get("episode", 0))
        if "curriculum_rng" in extra:
            self.rng_curriculum.bit_generator.state = extra["curriculum_rng"]
        if "replay_rng" in extra:
            self.buffer.rng.bit_generator.state = extra["replay_rng"]

    def episode_csv(self) -> str:
        return rows_to_csv(EPISODE_COLUMNS, self.episode_rows)

    def eval_csv(self) -> str:
        return rows_to_csv(EVAL_COLUMNS, self.eval_rows)


def quartile_means(returns) -> tuple[float, float]:
    """Mean of the first and of the last quarter of a learning curve."""
    r = np.asarray(returns, dtype=float)
    q = max(len(r) // 4, 1)
    return float(r[:q].mean()), float(r[-q:].mean())
