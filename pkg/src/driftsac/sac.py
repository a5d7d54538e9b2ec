"""Soft actor-critic with a state-value network, twin Q networks and a tanh-squashed policy.

Objectives, for a batch of transitions and a fresh reparameterized action
``a~ = tanh(mu + sigma * eps)``:

* value:  0.5 (V(s) - [min_i Q_i(s, a~) - alpha log pi(a~|s)])^2
* Q_i:    0.5 (Q_i(s, a) - [r + gamma (1 - done) V_target(s')])^2
* policy: alpha log pi(a~|s) - min_i Q_i(s, a~)

All four losses are evaluated with the parameters from before the step, then
each network takes one Adam step and the target value net is Polyak averaged.
"""

from dataclasses import asdict, dataclass, field
import logging
import math

import numpy as np

from .neural import Adam, CheckpointError, DenseNet, load_container, save_container

log = logging.getLogger(__name__)

ACTION_DIM = 2
LOG_2PI = math.log(2.0 * math.pi)
# keeps squashed actions strictly inside (-1, 1) in floating point
ACTION_BOUND = 1.0 - 1e-12


class TrainingAborted(RuntimeError):
    pass


@dataclass
class SacConfig:
    hidden_sizes: tuple[int, ...] = (256, 256)
    lr: float = 3e-4
    batch_size: int = 512
    gamma: float = 0.99
    polyak: float = 0.005
    alpha: float = 0.2
    buffer_capacity: int = 1_000_000
    update_threshold: int = 1000
    # None: as many updates as environment steps in the finished episode
    updates_per_trigger: int | None = None
    # rewards are multiplied by this before entering the Bellman targets
    reward_scale: float = 1e-3
    log_std_min: float = -20.0
    log_std_max: float = 2.0
    # update after every environment step instead of at episode end
    update_every_step: bool = False
    max_nonfinite_incidents: int = 20

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ValueError("hidden_sizes must list positive widths")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.polyak <= 1:
            raise ValueError("polyak must lie in (0, 1]")
        if self.alpha < 0 or self.lr <= 0 or self.batch_size < 1 or self.buffer_capacity < 1:
            raise ValueError("invalid SAC hyperparameters")
        if self.reward_scale <= 0:
            raise ValueError("reward_scale must be positive")


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with seeded uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, rng: np.random.Generator,
                 act_dim: int = ACTION_DIM):
        self.capacity = int(capacity)
        self.obs_dim = obs_dim
        self.rng = rng
        self.obs = np.zeros((self.capacity, obs_dim))
        self.next_obs = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros((self.capacity, act_dim))
        self.rewards = np.zeros(self.capacity)
        self.dones = np.zeros(self.capacity)
        self.ptr = 0
        self.size = 0
        self.total_added = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward: float, next_obs, done: bool) -> None:
        obs = np.asarray(obs, dtype=float)
        next_obs = np.asarray(next_obs, dtype=float)
        action = np.asarray(action, dtype=float)
        if obs.shape != (self.obs_dim,) or next_obs.shape != (self.obs_dim,):
            raise ValueError(f"observation length must be {self.obs_dim}")
        if not (np.all(np.isfinite(obs)) and np.all(np.isfinite(next_obs))
                and np.all(np.isfinite(action)) and math.isfinite(reward)):
            raise ValueError("refusing to store a non-finite transition")
        i = self.ptr
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.total_added += 1

    def sample(self, batch_size: int) -> dict:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = self.rng.integers(0, self.size, size=batch_size)
        return {"obs": self.obs[idx], "actions": self.actions[idx], "rewards": self.rewards[idx],
                "next_obs": self.next_obs[idx], "dones": self.dones[idx]}

    def oldest_first(self) -> np.ndarray:
        """Indices of stored transitions from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self.ptr) % self.capacity


@dataclass
class LossReport:
    j_v: float
    j_q1: float
    j_q2: float
    j_pi: float
    skipped: bool = False


def _log1m_tanh_sq(x: np.ndarray) -> np.ndarray:
    """log(1 - tanh(x)^2), stable for large |x|."""
    return 2.0 * (math.log(2.0) - x - np.logaddexp(0.0, -2.0 * x))


def squashed_log_prob(x: np.ndarray, eps: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log density of ``tanh(x)`` where ``x = mu + exp(log_std) * eps``; sums the last axis."""
    gauss = -0.5 * eps * eps - log_std - 0.5 * LOG_2PI
    return np.sum(gauss - _log1m_tanh_sq(x), axis=-1)


@dataclass
class _Streams:
    exploration: np.random.Generator
    update: np.random.Generator
    replay: np.random.Generator
    names: dict = field(default_factory=dict)


class SacAgent:
    def __init__(self, obs_dim: int, config: SacConfig | None = None,
                 rng: np.random.Generator | None = None, streams: dict | None = None):
        """Build the five networks.

        ``rng`` seeds parameter initialisation; ``streams`` maps ``exploration``,
        ``update`` and ``replay`` to their own generators.
        """
        self.config = config or SacConfig()
        self.obs_dim = int(obs_dim)
        rng = rng if rng is not None else np.random.default_rng(0)
        streams = streams or {}
        self.rng_exploration = streams.get("exploration", np.random.default_rng(1))
        self.rng_update = streams.get("update", np.random.default_rng(2))
        hidden = list(self.config.hidden_sizes)
        acts = ["relu"] * len(hidden) + ["linear"]
        self.policy = DenseNet([obs_dim, *hidden, 2 * ACTION_DIM], acts, rng, out_init=3e-3)
        self.q1 = DenseNet([obs_dim + ACTION_DIM, *hidden, 1], acts, rng, out_init=3e-3)
        self.q2 = DenseNet([obs_dim + ACTION_DIM, *hidden, 1], acts, rng, out_init=3e-3)
        self.value = DenseNet([obs_dim, *hidden, 1], acts, rng, out_init=3e-3)
        self.target_value = self.value.copy()
        lr = self.config.lr
        self.opt_policy = Adam(self.policy.params(), lr)
        self.opt_q1 = Adam(self.q1.params(), lr)
        self.opt_q2 = Adam(self.q2.params(), lr)
        self.opt_value = Adam(self.value.params(), lr)
        self.updates = 0
        self.nonfinite_incidents = 0

    # -- acting ---------------------------------------------------------

    def _policy_head(self, out: np.ndarray):
        mean = out[..., :ACTION_DIM]
        raw_log_std = out[..., ACTION_DIM:]
        log_std = np.clip(raw_log_std, self.config.log_std_min, self.config.log_std_max)
        return mean, raw_log_std, log_std

    def sample_action(self, obs, deterministic: bool = False):
        """Squashed action ``u`` in (-1, 1)^2 and its log probability (None if deterministic)."""
        obs = np.asarray(obs, dtype=float)
        if obs.shape != (self.obs_dim,):
            raise ValueError(f"observation length {obs.shape} != {self.obs_dim}")
        out = self.policy.forward(obs)
        if not np.all(np.isfinite(out)):
            raise TrainingAborted(f"policy produced non-finite output {out}")
        mean, _, log_std = self._policy_head(out)
        if deterministic:
            return np.clip(np.tanh(mean), -ACTION_BOUND, ACTION_BOUND), None
        eps = self.rng_exploration.standard_normal(ACTION_DIM)
        x = mean + np.exp(log_std) * eps
        u = np.clip(np.tanh(x), -ACTION_BOUND, ACTION_BOUND)
        return u, float(squashed_log_prob(x, eps, log_std))

    # -- learning -------------------------------------------------------

    def q_targets(self, rewards, next_obs, dones) -> np.ndarray:
        """Bellman targets for the Q networks, bootstrapped from the target value net."""
        cfg = self.config
        v_next = self.target_value.forward(next_obs)[:, 0]
        return np.asarray(rewards) * cfg.reward_scale + cfg.gamma * (1.0 - np.asarray(dones)) * v_next

    def losses_and_grads(self, batch: dict, eps: np.ndarray) -> tuple[LossReport, dict]:
        """All four losses and their parameter gradients for a given noise draw ``eps``."""
        cfg = self.config
        s, a = batch["obs"], batch["actions"]
        n = len(s)
        q_target = self.q_targets(batch["rewards"], batch["next_obs"], batch["dones"])
        sa = np.concatenate([s, a], axis=1)
        q1, q1_cache = self.q1.forward_train(sa)
        q2, q2_cache = self.q2.forward_train(sa)
        q1, q2 = q1[:, 0], q2[:, 0]
        j_q1 = 0.5 * float(np.mean((q1 - q_target) ** 2))
        j_q2 = 0.5 * float(np.mean((q2 - q_target) ** 2))

        # fresh reparameterized action
        p_out, p_cache = self.policy.forward_train(s)
        mean, raw_log_std, log_std = self._policy_head(p_out)
        std = np.exp(log_std)
        x = mean + std * eps
        u = np.tanh(x)
        logp = squashed_log_prob(x, eps, log_std)
        s_u = np.concatenate([s, u], axis=1)
        q1_pi, q1_pi_cache = self.q1.forward_train(s_u)
        q2_pi, q2_pi_cache = self.q2.forward_train(s_u)
        q1_pi, q2_pi = q1_pi[:, 0], q2_pi[:, 0]
        use_q1 = q1_pi <= q2_pi
        min_q = np.where(use_q1, q1_pi, q2_pi)

        v, v_cache = self.value.forward_train(s)
        v = v[:, 0]
        v_target = min_q - cfg.alpha * logp
        j_v = 0.5 * float(np.mean((v - v_target) ** 2))
        j_pi = float(np.mean(cfg.alpha * logp - min_q))

        report = LossReport(j_v, j_q1, j_q2, j_pi)
        if not all(math.isfinite(val) for val in (j_v, j_q1, j_q2, j_pi)):
            return report, {}

        # policy gradient through the chosen critic
        pick1 = use_q1.astype(float)
        _, dq1_in = self.q1.backward(q1_pi_cache, (-pick1 / n)[:, None])
        _, dq2_in = self.q2.backward(q2_pi_cache, (-(1.0 - pick1) / n)[:, None])
        dj_du = dq1_in[:, self.obs_dim:] + dq2_in[:, self.obs_dim:]
        dj_dx = cfg.alpha * 2.0 * u / n + dj_du * (1.0 - u * u)
        dj_dlogstd = -cfg.alpha / n + dj_dx * std * eps
        in_range = (raw_log_std >= cfg.log_std_min) & (raw_log_std <= cfg.log_std_max)
        dj_dlogstd = dj_dlogstd * in_range
        g_pi, _ = self.policy.backward(p_cache, np.concatenate([dj_dx, dj_dlogstd], axis=1),
                                       need_input_grad=False)

        g_q1, _ = self.q1.backward(q1_cache, ((q1 - q_target) / n)[:, None], need_input_grad=False)
        g_q2, _ = self.q2.backward(q2_cache, ((q2 - q_target) / n)[:, None], need_input_grad=False)
        g_v, _ = self.value.backward(v_cache, ((v - v_target) / n)[:, None], need_input_grad=False)
        return report, {"policy": g_pi, "q1": g_q1, "q2": g_q2, "value": g_v}

    def update(self, batch: dict) -> LossReport:
        """One gradient step on every network, then Polyak-average the target value net."""
        eps = self.rng_update.standard_normal((len(batch["obs"]), ACTION_DIM))
        report, grads = self.losses_and_grads(batch, eps)
        if not grads:
            self.nonfinite_incidents += 1
            report.skipped = True
            log.warning("non-finite SAC loss (incident %d)", self.nonfinite_incidents)
            if self.nonfinite_incidents > self.config.max_nonfinite_incidents:
                raise TrainingAborted("too many non-finite loss incidents")
            return report
        ok = all([self.opt_q1.step(grads["q1"]), self.opt_q2.step(grads["q2"]),
                  self.opt_value.step(grads["value"]), self.opt_policy.step(grads["policy"])])
        if not ok:
            self.nonfinite_incidents += 1
            report.skipped = True
        self.soft_update_target()
        self.updates += 1
        return report

    def soft_update_target(self) -> None:
        rho = self.config.polyak
        for t, v in zip(self.target_value.params(), self.value.params()):
            t[...] = rho * v + (1.0 - rho) * t

    # -- persistence ----------------------------------------------------

    NETS = ("policy", "q1", "q2", "value", "target_value")
    OPTS = {"policy": "opt_policy", "q1": "opt_q1", "q2": "opt_q2", "value": "opt_value"}

    def state(self) -> tuple[dict, dict]:
        arrays = {}
        meta = {"obs_dim": self.obs_dim, "config": asdict(self.config), "nets": {},
                "optimizers": {}, "updates": self.updates,
                "nonfinite_incidents": self.nonfinite_incidents,
                "rng": {"exploration": self.rng_exploration.bit_generator.state,
                        "update": self.rng_update.bit_generator.state}}
        for name in self.NETS:
            net = getattr(self, name)
            meta["nets"][name] = net.describe()
            for k, p in enumerate(net.params()):
                arrays[f"{name}/{k}"] = p
        for name, attr in self.OPTS.items():
            opt = getattr(self, attr)
            meta["optimizers"][name] = opt.state_meta()
            for k, p in enumerate(opt.state_arrays()):
                arrays[f"{attr}/{k}"] = p
        return arrays, meta

    def save(self, path, extra_meta: dict | None = None) -> None:
        arrays, meta = self.state()
        meta["extra"] = extra_meta or {}
        save_container(path, arrays, meta)

    @classmethod
    def load(cls, path) -> tuple["SacAgent", dict]:
        arrays, meta = load_container(path)
        cfg = dict(meta["config"])
        config = SacConfig(**cfg)
        agent = cls(meta["obs_dim"], config)
        for name in cls.NETS:
            net = getattr(agent, name)
            if net.describe() != meta["nets"][name]:
                raise CheckpointError(f"network {name} in checkpoint does not match its config")
            net.set_params([arrays[f"{name}/{k}"] for k in range(len(net.params()))])
        for name, attr in cls.OPTS.items():
            opt = getattr(agent, attr)
            n = len(opt.state_arrays())
            opt.load_state([arrays[f"{attr}/{k}"] for k in range(n)], meta["optimizers"][name])
        agent.updates = meta["updates"]
        agent.nonfinite_incidents = meta["nonfinite_incidents"]
        agent.rng_exploration.bit_generator.state = meta["rng"]["exploration"]
        agent.rng_update.bit_generator.state = meta["rng"]["update"]
        return agent, meta.get("extra", {})
