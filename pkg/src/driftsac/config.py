"""Run configuration: YAML loading, overrides, validation and derived objects."""

import copy
from importlib import resources
import math
from pathlib import Path
import re

import numpy as np
import yaml

from .control import SmoothingGains
from .env import EnvConfig
from .guidance import NORMALIZATION, VfgParams
from .reward import RewardParams
from .sac import SacConfig
from .vehicle import PRESETS, VehicleParams

STREAM_NAMES = ("track_gen", "init", "exploration", "update", "replay", "curriculum", "spawn")


class ConfigError(ValueError):
    pass


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-4`` (no decimal point) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def parse_yaml(text: str):
    return yaml.load(text, Loader=_Loader)


def default_config_text() -> str:
    return resources.files("driftsac").joinpath("data/default_config.yaml").read_text()


def default_config() -> dict:
    return parse_yaml(default_config_text())


# keys whose default is null or an open mapping and so carry no type to check against
_FREE_KEYS = {("vehicle", "overrides"), ("reference", "file"), ("sac", "updates_per_trigger"),
              ("tracks", "dir")}


def _merge(base: dict, extra: dict, path=()) -> None:
    for key, value in extra.items():
        where = path + (key,)
        if key not in base:
            raise ConfigError(f"unknown config key {'.'.join(where)}")
        if isinstance(base[key], dict) and where not in _FREE_KEYS:
            if not isinstance(value, dict):
                raise ConfigError(f"{'.'.join(where)} must be a mapping")
            _merge(base[key], value, where)
        else:
            base[key] = value


def _parse_set(item: str) -> tuple[tuple, object]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    return tuple(key.strip().split(".")), parse_yaml(raw)


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the file at ``path``, then ``key.sub=value`` overrides."""
    cfg = default_config()
    if path is not None:
        user = parse_yaml(Path(path).read_text()) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path} does not hold a mapping")
        _merge(cfg, user)
    for item in overrides:
        keys, value = _parse_set(item)
        nested = value
        for k in reversed(keys):
            nested = {k: nested}
        _merge(cfg, nested)
    validate(cfg)
    return cfg


def _check_types(cfg: dict, ref: dict, path=()) -> None:
    for key, default in ref.items():
        where = path + (key,)
        value = cfg[key]
        if where in _FREE_KEYS:
            continue
        name = ".".join(where)
        if isinstance(default, dict):
            _check_types(value, default, where)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{name} must be true or false")
        elif isinstance(default, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name} must be a number")
            if isinstance(default, int) and not isinstance(default, bool) \
                    and isinstance(value, float) and not value.is_integer():
                raise ConfigError(f"{name} must be an integer")
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite")
        elif isinstance(default, list):
            if not isinstance(value, list):
                raise ConfigError(f"{name} must be a list")
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigError(f"{name} must be a string")


def _range(cfg, name, lo=None, hi=None, lo_open=False):
    section, key = name.split(".")
    v = cfg[section][key]
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{name}={v} must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{name}={v} must be <= {hi}")


def validate(cfg: dict) -> None:
    """Check types and ranges of every entry; raises :class:`ConfigError`."""
    _check_types(cfg, default_config())
    if cfg["vehicle"]["preset"] not in PRESETS:
        raise ConfigError(f"unknown vehicle preset {cfg['vehicle']['preset']!r}; "
                          f"valid: {', '.join(PRESETS)}")
    if cfg["observation"]["mode"] not in (42, 30):
        raise ConfigError("observation.mode must be 42 or 30")
    if cfg["reference"]["source"] not in ("expert", "rough", "file"):
        raise ConfigError("reference.source must be expert, rough or file")
    if cfg["reference"]["source"] == "file" and not cfg["reference"]["file"]:
        raise ConfigError("reference.file is required when reference.source is file")
    for name in ("randomization.friction_range", "randomization.mass_range"):
        section, key = name.split(".")
        r = cfg[section][key]
        if len(r) != 2 or not r[0] <= r[1]:
            raise ConfigError(f"{name} must be an ordered pair")
    lo, hi = cfg["randomization"]["friction_range"]
    if lo < 1.0 or hi > 6.0:
        raise ConfigError("randomization.friction_range must lie within [1, 6]")
    if cfg["randomization"]["mass_range"][0] <= 0:
        raise ConfigError("randomization.mass_range must be positive")
    _range(cfg, "guidance.k", 0, lo_open=True)
    _range(cfg, "guidance.psi_inf_deg", 0, 90, lo_open=True)
    _range(cfg, "guidance.lookahead_points", 1)
    _range(cfg, "guidance.lookahead_spacing", 0, lo_open=True)
    for key in ("k1", "k2", "w_ey", "w_epsi", "w_ebeta", "v_min", "low_speed_factor"):
        _range(cfg, f"reward.{key}", 0, lo_open=True)
    _range(cfg, "control.k1_steer", 0, 1)
    _range(cfg, "control.k1_throttle", 0, 1)
    _range(cfg, "reference.v_const", 0, lo_open=True)
    _range(cfg, "env.dt", 0, lo_open=True)
    _range(cfg, "env.spawn_speed", 0)
    _range(cfg, "env.max_steps", 1)
    _range(cfg, "env.stall_steps", 1)
    _range(cfg, "env.arrived_threshold", 0, lo_open=True)
    _range(cfg, "sac.lr", 0, lo_open=True)
    _range(cfg, "sac.batch_size", 1)
    _range(cfg, "sac.gamma", 0, 1, lo_open=True)
    _range(cfg, "sac.polyak", 0, 1, lo_open=True)
    _range(cfg, "sac.alpha", 0)
    _range(cfg, "sac.buffer_capacity", 1)
    _range(cfg, "sac.update_threshold", 0)
    _range(cfg, "sac.reward_scale", 0, lo_open=True)
    upt = cfg["sac"]["updates_per_trigger"]
    if upt is not None and (isinstance(upt, bool) or not isinstance(upt, int) or upt < 1):
        raise ConfigError("sac.updates_per_trigger must be null or a positive integer")
    hs = cfg["sac"]["hidden_sizes"]
    if not hs or not all(isinstance(h, int) and not isinstance(h, bool) and h > 0 for h in hs):
        raise ConfigError("sac.hidden_sizes must list positive integers")
    for key in ("stage1_episodes", "stage2_episodes", "eval_every", "checkpoint_every"):
        _range(cfg, f"training.{key}", 0)
    _range(cfg, "evaluation.repetitions", 1)
    _range(cfg, "evaluation.spawn_jitter", 0)
    _range(cfg, "evaluation.smos_window", 1)
    overrides = cfg["vehicle"]["overrides"]
    if not isinstance(overrides, dict):
        raise ConfigError("vehicle.overrides must be a mapping")
    try:
        vehicle_params(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid vehicle settings: {exc}") from exc


# -- derived objects ------------------------------------------------------


def vehicle_params(cfg: dict) -> VehicleParams:
    base = PRESETS[cfg["vehicle"]["preset"]]
    return base.with_overrides(**cfg["vehicle"]["overrides"]) if cfg["vehicle"]["overrides"] else base


def env_config(cfg: dict, **changes) -> EnvConfig:
    g, r, c, e = cfg["guidance"], cfg["reward"], cfg["control"], cfg["env"]
    kwargs = dict(
        dt=e["dt"],
        smoothing=c["smoothing"],
        gains=SmoothingGains(c["k1_steer"], c["k1_throttle"], 1.0 - c["k1_steer"],
                             1.0 - c["k1_throttle"]),
        ablate_slip=cfg["observation"]["mode"] == 30,
        mask_slip_errors=cfg["reference"]["source"] == "rough",
        vfg=VfgParams(k=g["k"], psi_inf=math.radians(g["psi_inf_deg"])),
        reward=RewardParams(**r),
        spawn_speed=e["spawn_speed"],
        max_steps=e["max_steps"],
        stall_steps=e["stall_steps"],
        stall_distance=e["stall_distance"],
        arrived_threshold=e["arrived_threshold"],
        lookahead_points=g["lookahead_points"],
        lookahead_spacing=g["lookahead_spacing"],
    )
    kwargs.update(changes)
    return EnvConfig(**kwargs)


def sac_config(cfg: dict) -> SacConfig:
    s = dict(cfg["sac"])
    s["hidden_sizes"] = tuple(s["hidden_sizes"])
    return SacConfig(**s)


def rng_streams(seed: int, names=STREAM_NAMES) -> dict:
    """Independent generators per purpose, all derived from ``seed``."""
    return {name: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAM_NAMES.index(name),)))
            for name in names}


def normalization_table() -> dict:
    return dict(NORMALIZATION)


def snapshot(cfg: dict) -> dict:
    return copy.deepcopy(cfg)
