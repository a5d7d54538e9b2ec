"""Command line entry point: gen-tracks, train, eval, rollout, compare."""

import argparse
import json
import logging
import platform
import re
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import (ConfigError, env_config, load_config, normalization_table, parse_yaml,
                     rng_streams, sac_config, vehicle_params)
from .env import DriftEnv
from .evaluation import (Aggregate, aggregate, compare_table, compute_metrics,
                         plot_data_csv)
from .guidance import ABLATED_DIM, FULL_DIM
from .neural import CheckpointError
from .sac import SacAgent
from .track import (Track, TrackGenerationError, TrackSpec, generate_track,
                    load_track, load_trajectory, rough_centerline_reference, save_track,
                    scripted_expert_reference)
from .training import CurriculumConfig, Trainer, agent_policy, run_episode
from .vehicle import PRESETS

log = logging.getLogger("driftsac")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

FIXED_VARIANTS = ("sac", "sac-wos", "sac-30", "app-test")
_FM = re.compile(r"^F(\d+(?:\.\d+)?)M(\d+(?:\.\d+)?)$")


class CommandError(RuntimeError):
    pass


# -- tracks ---------------------------------------------------------------


def bundled_track_dir() -> Path:
    return Path(str(resources.files("driftsac").joinpath("data/tracks")))


def bundled_spec_path() -> Path:
    return Path(str(resources.files("driftsac").joinpath("data/track_specs.yaml")))


def load_spec_entries(path) -> list[dict]:
    doc = parse_yaml(Path(path).read_text()) or {}
    entries = doc.get("tracks", []) if isinstance(doc, dict) else doc
    if not isinstance(entries, list):
        raise CommandError(f"{path} does not hold a list of track specs")
    return entries


def load_track_specs(path) -> list[TrackSpec]:
    return [TrackSpec.from_dict(e) for e in load_spec_entries(path)]


def track_dir(cfg: dict) -> Path:
    return Path(cfg["tracks"]["dir"]) if cfg["tracks"]["dir"] else bundled_track_dir()


def resolve_track(cfg: dict, name_or_path: str) -> Track:
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        return load_track(p)
    candidate = track_dir(cfg) / f"{name_or_path}.json"
    if not candidate.exists():
        raise CommandError(f"track {name_or_path!r} not found in {track_dir(cfg)}")
    return load_track(candidate)


def build_reference(cfg: dict, track: Track, source: str | None = None):
    source = source or cfg["reference"]["source"]
    if source == "rough":
        return rough_centerline_reference(track, cfg["reference"]["v_const"])
    if source == "file":
        return load_trajectory(cfg["reference"]["file"])
    # the expert reference always comes from the configured (training) vehicle
    return scripted_expert_reference(track, vehicle_params(cfg))


# -- run metadata ---------------------------------------------------------


def write_run_meta(out: Path, command: str, cfg: dict | None, extra: dict | None = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "command": command,
        "argv": sys.argv,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "time": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "config": cfg,
        "seed": None if cfg is None else cfg["seed"],
        "normalization": normalization_table(),
        "smoothing_applies_to": "mapped actions",
    }
    meta.update(extra or {})
    (out / "run_meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True, default=str))


# -- gen-tracks -----------------------------------------------------------


def cmd_gen_tracks(args) -> int:
    spec_path = Path(args.spec) if args.spec else bundled_spec_path()
    out = Path(args.out)
    entries = load_spec_entries(spec_path)
    out.mkdir(parents=True, exist_ok=True)
    failures = []
    for k, entry in enumerate(entries):
        label = entry.get("name", f"#{k}") if isinstance(entry, dict) else f"#{k}"
        try:
            spec = TrackSpec.from_dict(entry)
            track = generate_track(spec)
        except (TrackGenerationError, ValueError, TypeError, KeyError) as exc:
            print(f"error: track {label}: {exc}", file=sys.stderr)
            failures.append(label)
            continue
        name = spec.name or f"seed{spec.seed}"
        save_track(track, out / f"{name}.json")
        print(f"{name}: {track.total_length:.1f} m, {len(track.corner_segments)} corners")
    write_run_meta(out, "gen-tracks", None, {"spec_file": str(spec_path), "failures": failures})
    return EXIT_FAILED if failures else EXIT_OK


# -- train ----------------------------------------------------------------


def _obs_dim(cfg: dict) -> int:
    return ABLATED_DIM if cfg["observation"]["mode"] == 30 else FULL_DIM


def cmd_train(args, cfg: dict) -> int:
    out = Path(args.out or cfg["output_dir"])
    stage = args.stage
    tr = cfg["training"]
    names = [tr["stage1_track"]] if stage == 1 else list(tr["stage2_tracks"])
    tracks = [resolve_track(cfg, n) for n in names]
    eval_track = resolve_track(cfg, tr["stage1_track"])
    streams = rng_streams(cfg["seed"])
    extra = None
    if args.resume:
        agent, extra = SacAgent.load(args.resume)
        if agent.obs_dim != _obs_dim(cfg):
            raise CommandError(f"checkpoint observes {agent.obs_dim} entries but the config asks "
                               f"for mode {cfg['observation']['mode']}")
        wanted = sac_config(cfg)
        if wanted.hidden_sizes != agent.config.hidden_sizes:
            raise CommandError(f"checkpoint network widths {agent.config.hidden_sizes} differ "
                               f"from the config {wanted.hidden_sizes}")
        # hyperparameters come from the config, learned state from the checkpoint
        agent.config = wanted
    else:
        agent = SacAgent(_obs_dim(cfg), sac_config(cfg), rng=streams["init"], streams=streams)
    if args.dry_run:
        print(f"config valid; stage {stage} on {', '.join(names)}; "
              f"{agent.obs_dim}-dim observations")
        return EXIT_OK
    trainer = Trainer(agent, env_config(cfg), vehicle_params(cfg), streams)
    if extra is not None and extra.get("stage") == stage:
        trainer.restore_counters(extra)
    episodes = tr["stage1_episodes"] if stage == 1 else tr["stage2_episodes"]
    cur = CurriculumConfig(episodes=episodes, randomize=stage == 2,
                           friction_range=tuple(cfg["randomization"]["friction_range"]),
                           mass_range=tuple(cfg["randomization"]["mass_range"]),
                           eval_every=tr["eval_every"], checkpoint_every=tr["checkpoint_every"])
    out.mkdir(parents=True, exist_ok=True)
    write_run_meta(out, "train", cfg, {"stage": stage, "resume": args.resume})

    def progress(ep, stats):
        log.info("episode %d: %d steps, return %.0f, %s", ep, stats.steps, stats.ret,
                 stats.terminal.value)

    trainer.run_stage(stage, tracks, cur, eval_track=eval_track, checkpoint_dir=out,
                      progress=progress)
    final = out / f"stage{stage}_final.ckpt"
    trainer.save_checkpoint(final, stage)
    (out / f"stage{stage}_episodes.csv").write_text(trainer.episode_csv())
    (out / f"stage{stage}_eval.csv").write_text(trainer.eval_csv())
    print(f"saved {final}")
    return EXIT_OK


# -- eval -----------------------------------------------------------------


def variant_names() -> list[str]:
    return list(FIXED_VARIANTS) + list(PRESETS) + ["F<friction>M<mass>"]


def variant_setup(cfg: dict, variant: str, obs_dim: int) -> dict:
    """Vehicle, environment and reference choices of one evaluation variant."""
    params = vehicle_params(cfg)
    env_changes = {}
    source = cfg["reference"]["source"]
    m = _FM.match(variant)
    if variant == "sac":
        pass
    elif variant == "sac-wos":
        env_changes["smoothing"] = False
    elif variant == "sac-30":
        env_changes["ablate_slip"] = True
    elif variant == "app-test":
        source = "rough"
        env_changes["mask_slip_errors"] = True
    elif variant in PRESETS:
        params = PRESETS[variant]
    elif m:
        friction, mass = float(m.group(1)), float(m.group(2))
        # masses below 100 are read as tonnes (F3.5M1.8 style)
        if mass < 100:
            mass *= 1000.0
        params = params.with_overrides(tire_friction=friction, mass=mass)
    else:
        raise CommandError(f"unknown variant {variant!r}; valid: {', '.join(variant_names())}")
    wants = ABLATED_DIM if variant == "sac-30" else FULL_DIM
    if variant != "sac-30" and cfg["observation"]["mode"] == 30:
        wants = ABLATED_DIM
        env_changes["ablate_slip"] = True
    if obs_dim != wants:
        raise CommandError(f"variant {variant} needs a {wants}-dim checkpoint, got {obs_dim}")
    if source != "rough":
        env_changes.setdefault("mask_slip_errors", False)
    return {"params": params, "env": env_config(cfg, **env_changes), "source": source}


def evaluate_variant(cfg: dict, agent: SacAgent, track: Track, variant: str,
                     rng: np.random.Generator):
    setup = variant_setup(cfg, variant, agent.obs_dim)
    reference = build_reference(cfg, track, setup["source"])
    env = DriftEnv(track, reference, setup["params"], setup["env"])
    jitter = cfg["evaluation"]["spawn_jitter"]
    logs, reports = [], []
    for rep in range(cfg["evaluation"]["repetitions"]):
        offset = float(rng.uniform(-jitter, jitter)) if jitter > 0 else 0.0
        stats = run_episode(env, agent_policy(agent, deterministic=True), lateral_offset=offset,
                            record=True)
        stats.rollout.meta = {"variant": variant, "repetition": rep, "lateral_offset": offset,
                              "deterministic": True}
        logs.append(stats.rollout)
        reports.append(compute_metrics(stats.rollout, track, cfg["evaluation"]["smos_window"]))
    return logs, reports


def cmd_eval(args, cfg: dict) -> int:
    out = Path(args.out or Path(cfg["output_dir"]) / "eval")
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    agent, _ = SacAgent.load(args.checkpoint)
    for v in variants:
        variant_setup(cfg, v, agent.obs_dim)  # refuse bad pairs before any rollout
    track = resolve_track(cfg, args.track or cfg["tracks"]["eval_track"])
    streams = rng_streams(cfg["seed"])
    out.mkdir(parents=True, exist_ok=True)
    write_run_meta(out, "eval", cfg, {"checkpoint": str(args.checkpoint), "variants": variants,
                                      "smos": "mean of rolling population std"})
    aggregates = {}
    arrivals = {}
    for v in variants:
        logs, reports = evaluate_variant(cfg, agent, track, v, streams["spawn"])
        agg = aggregate(reports)
        aggregates[v] = agg
        arrivals[v] = sum(lg.terminal == "Arrival" for lg in logs)
        for k, lg in enumerate(logs):
            lg.save(out / f"{v}_rep{k}.csv")
            (out / f"{v}_rep{k}_plot.csv").write_text(plot_data_csv(lg))
        doc = {"variant": v, "aggregate": agg.to_dict(),
               "reports": [r.to_dict() for r in reports],
               "terminals": [lg.terminal for lg in logs]}
        (out / f"{v}_report.json").write_text(json.dumps(doc, indent=1, sort_keys=True))
        print(f"{v}: {arrivals[v]}/{len(logs)} arrivals")
    if len(aggregates) >= 2:
        table = compare_table(aggregates)
        (out / "comparison.txt").write_text(table.to_text())
        (out / "comparison.csv").write_text(table.to_csv())
        print(table.to_text())
    return EXIT_OK


# -- rollout --------------------------------------------------------------


def cmd_rollout(args, cfg: dict) -> int:
    out = Path(args.out or Path(cfg["output_dir"]) / "rollout")
    agent, _ = SacAgent.load(args.checkpoint)
    variant = args.variant
    setup = variant_setup(cfg, variant, agent.obs_dim)
    track = resolve_track(cfg, args.track or cfg["tracks"]["eval_track"])
    reference = build_reference(cfg, track, setup["source"])
    env = DriftEnv(track, reference, setup["params"], setup["env"])
    deterministic = not args.stochastic
    offset = args.lateral_offset
    stats = run_episode(env, agent_policy(agent, deterministic=deterministic),
                        lateral_offset=offset, record=True)
    stats.rollout.meta = {"variant": variant, "deterministic": deterministic,
                          "mode": "evaluation" if deterministic else "stochastic",
                          "lateral_offset": offset}
    out.mkdir(parents=True, exist_ok=True)
    write_run_meta(out, "rollout", cfg, {"checkpoint": str(args.checkpoint),
                                         "deterministic": deterministic})
    stats.rollout.save(out / "rollout.csv")
    (out / "plot.csv").write_text(plot_data_csv(stats.rollout))
    report = compute_metrics(stats.rollout, track, cfg["evaluation"]["smos_window"])
    (out / "metrics.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    print(f"{stats.terminal.value} after {stats.steps} steps")
    return EXIT_OK


# -- compare --------------------------------------------------------------


def cmd_compare(args) -> int:
    runs = {}
    for path in args.reports:
        doc = json.loads(Path(path).read_text())
        label = doc.get("variant", Path(path).stem)
        if label in runs:
            label = f"{label} ({path})"
        runs[label] = Aggregate(**doc["aggregate"])
    table = compare_table(runs)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.txt").write_text(table.to_text())
        (out / "comparison.csv").write_text(table.to_csv())
        write_run_meta(out, "compare", None, {"reports": args.reports})
    print(table.to_text())
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="driftsac", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="YAML run config (defaults fill the rest)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config entry, e.g. sac.lr=1e-4")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--single-thread", action="store_true",
                        help="pin numerical libraries to one thread")

    g = sub.add_parser("gen-tracks", help="generate track files from a spec list")
    g.add_argument("--spec", help="YAML list of track specs (default: the bundled set)")
    g.add_argument("--out", default="tracks")

    t = sub.add_parser("train", help="train a controller")
    with_config(t)
    t.add_argument("--stage", type=int, choices=(1, 2), default=1)
    t.add_argument("--resume", help="checkpoint to continue from")
    t.add_argument("--dry-run", action="store_true", help="validate and exit")

    e = sub.add_parser("eval", help="evaluate a checkpoint under one or more variants")
    with_config(e)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--variants", default="sac",
                   help="comma list of: " + ", ".join(variant_names()))
    e.add_argument("--track", help="track name or JSON path (default: the eval track)")

    r = sub.add_parser("rollout", help="record a single rollout")
    with_config(r)
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--track")
    r.add_argument("--variant", default="sac")
    r.add_argument("--stochastic", action="store_true", help="sample actions instead of the mean")
    r.add_argument("--lateral-offset", type=float, default=0.0)

    c = sub.add_parser("compare", help="tabulate saved variant reports")
    c.add_argument("reports", nargs="+", help="*_report.json files written by eval")
    c.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    limiter = None
    if getattr(args, "single_thread", False):
        limiter = threadpool_limits(limits=1)
    try:
        if args.command == "gen-tracks":
            return cmd_gen_tracks(args)
        if args.command == "compare":
            return cmd_compare(args)
        cfg = load_config(args.config, args.set)
        handler = {"train": cmd_train, "eval": cmd_eval, "rollout": cmd_rollout}[args.command]
        return handler(args, cfg)
    except (ConfigError, CommandError, CheckpointError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, (ConfigError, CommandError)) else EXIT_FAILED
    finally:
        if limiter is not None:
            limiter.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
