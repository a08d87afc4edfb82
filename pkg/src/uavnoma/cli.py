"""Command-line entry point: ``train``, ``eval``, ``baseline`` and ``compare``.

Every subcommand writes only under ``--out``: a ``manifest.json`` first,
then the CSV files documented in :mod:`uavnoma.experiments`.

A ``compare`` spec uses the run-config format plus a ``[compare]`` section::

    [compare]
    runs = mdqn, independent, circular
    seeds = 0, 1, 2
    eval_episodes = 20

    [train]
    episodes = 300
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baselines import BaselineKind
from .config import KEY_SECTION, dump_config, parse_config, parse_config_text
from .env import ConfigError, EnvConfig
from .experiments import (
    RUN_KINDS, run_cell, start_manifest, write_cell, write_csv, write_episodes, write_slots,
)
from .metrics import mean_std, steps_to_threshold
from .neural import load_checkpoint
from .trainer import ALGOS, Trainer, TrainerConfig

COMPARE_KEYS = {"runs", "seeds", "eval_episodes"}


class CliError(Exception):
    pass


def _load_config(path):
    if path is None:
        return EnvConfig().validate(), TrainerConfig().validate()
    return parse_config(path)


def _write_config(out: Path, env_cfg, train_cfg) -> None:
    (out / "config.cfg").write_text(dump_config(env_cfg, train_cfg), encoding="utf-8")


def cmd_train(args) -> None:
    env_cfg, train_cfg = _load_config(args.config)
    train_cfg = replace(train_cfg, algo=args.algo or train_cfg.algo,
                        seed=train_cfg.seed if args.seed is None else args.seed)
    if args.episodes is not None:
        train_cfg = replace(train_cfg, episodes=args.episodes)
    train_cfg.validate()
    out = Path(args.out)
    outputs = ["config.cfg", "episodes.csv", "loss.csv", "checkpoint.txt"]
    start_manifest("train", env_cfg, train_cfg, [train_cfg.seed], out, outputs)
    _write_config(out, env_cfg, train_cfg)
    cell = run_cell(train_cfg.algo, env_cfg, train_cfg, train_cfg.seed, eval_episodes=0)
    write_cell(cell, out)


def cmd_eval(args) -> None:
    ckpt = Path(args.checkpoint)
    if not ckpt.is_file():
        raise CliError(f"checkpoint not found: {ckpt}")
    config = args.config
    if config is None and (ckpt.parent / "config.cfg").is_file():
        config = ckpt.parent / "config.cfg"
    env_cfg, train_cfg = _load_config(config)
    try:
        nets = load_checkpoint(ckpt)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    algo = "mdqn" if len(nets) == 1 else "independent"
    seed = train_cfg.seed if args.seed is None else args.seed
    train_cfg = replace(train_cfg, algo=algo, seed=seed)
    trainer = Trainer(env_cfg, train_cfg)
    try:
        trainer.load_nets(nets)
    except ValueError as exc:
        raise CliError(f"incompatible checkpoint: {exc}") from None
    out = Path(args.out)
    start_manifest("eval", env_cfg, train_cfg, [seed], out, ["eval_episodes.csv", "slots.csv"])
    results = trainer.evaluate(args.episodes, keep_slots=True)
    write_episodes(out / "eval_episodes.csv", results)
    write_slots(out / "slots.csv", results, env_cfg.user_count)


def cmd_baseline(args) -> None:
    env_cfg, train_cfg = _load_config(args.config)
    seed = train_cfg.seed if args.seed is None else args.seed
    if args.episodes is not None:
        train_cfg = replace(train_cfg, episodes=args.episodes)
    out = Path(args.out)
    outputs = ["config.cfg", "eval_episodes.csv", "slots.csv"]
    if args.kind not in ("circular", "chaotic"):
        outputs += ["episodes.csv", "loss.csv", "checkpoint.txt"]
    start_manifest(f"baseline {args.kind}", env_cfg, train_cfg, [seed], out, outputs)
    cell = run_cell(args.kind, env_cfg, train_cfg, seed, args.eval_episodes)
    _write_config(out, cell.env_cfg, cell.trainer.cfg)
    write_cell(cell, out)


def parse_compare_spec(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"compare spec not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    settings = {"runs": ["mdqn", "independent"], "seeds": [0, 1, 2], "eval_episodes": 20}
    rest, in_compare = [], False
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_compare = stripped == "[compare]"
        key, _, raw = (p.strip() for p in stripped.partition("="))
        if in_compare and stripped.startswith("["):
            rest.append("")
        elif in_compare and key in KEY_SECTION:
            # run-config keys are unique, so they may follow any header
            rest.append(stripped)
        elif in_compare:
            rest.append("")
            if stripped and not stripped.startswith(("#", ";")):
                if key not in COMPARE_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r} in [compare]")
                items = [x.strip() for x in raw.split(",") if x.strip()]
                try:
                    if key == "runs":
                        bad = [x for x in items if x not in RUN_KINDS]
                        if bad:
                            raise ValueError(f"unknown run kind {bad[0]!r}")
                        settings[key] = items
                    elif key == "seeds":
                        settings[key] = [int(x) for x in items]
                    else:
                        settings[key] = int(raw)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: invalid value for {key!r}: {exc}") from None
        else:
            rest.append(line)
    env_cfg, train_cfg = parse_config_text("\n".join(rest), str(path))
    return settings, env_cfg, train_cfg


def _compare_cell(job):
    run, env_cfg, train_cfg, seed, eval_episodes, cell_dir = job
    cell = run_cell(run, env_cfg, train_cfg, seed, eval_episodes)
    write_cell(cell, cell_dir)
    losses = np.array([l for _, l in cell.loss_log])
    steps = np.array([s for s, _ in cell.loss_log])
    return {
        "run": run,
        "seed": seed,
        "eval_rate": cell.eval_rate,
        "eval_throughput": float(np.mean([r.throughput_bits for r in cell.eval_results])),
        "violation_rate": float(np.mean([r.violation_rate for r in cell.eval_results])),
        "hard_violations": cell.hard_violations,
        "steps_to_threshold": steps_to_threshold(steps, losses) if losses.size else float("nan"),
    }


def cmd_compare(args) -> None:
    settings, env_cfg, train_cfg = parse_compare_spec(args.spec)
    out = Path(args.out)
    jobs = [(run, env_cfg, train_cfg, seed, settings["eval_episodes"], out / run / f"seed{seed}")
            for run in settings["runs"] for seed in settings["seeds"]]
    outputs = ["config.cfg", "summary.csv", "cells.csv"] + [
        str(Path(j[-1]).relative_to(out)) for j in jobs]
    if {"mdqn", "independent"} <= set(settings["runs"]):
        outputs.append("convergence.csv")
    start_manifest("compare", env_cfg, train_cfg, settings["seeds"], out, outputs)
    _write_config(out, env_cfg, train_cfg)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_compare_cell, jobs))
    else:
        rows = [_compare_cell(j) for j in jobs]
    metrics = ["eval_rate", "eval_throughput", "violation_rate", "hard_violations", "steps_to_threshold"]
    write_csv(out / "cells.csv", ["run", "seed"] + metrics,
              [[r["run"], r["seed"]] + [float(r[m]) for m in metrics] for r in rows])
    summary = []
    for run in settings["runs"]:
        mine = [r for r in rows if r["run"] == run]
        for m in metrics:
            mean, std = mean_std([r[m] for r in mine])
            summary.append([run, m, mean, std, len(mine)])
    write_csv(out / "summary.csv", ["run", "metric", "mean", "std", "n"], summary)
    if {"mdqn", "independent"} <= set(settings["runs"]):
        conv = []
        for seed in settings["seeds"]:
            by = {r["run"]: r["steps_to_threshold"] for r in rows if r["seed"] == seed}
            conv.append([seed, by["mdqn"], by["independent"], by["independent"] / by["mdqn"]])
        write_csv(out / "convergence.csv", ["seed", "mdqn_steps", "independent_steps", "ratio"], conv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavnoma", description="Multi-UAV NOMA deep Q-learning experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train shared or independent DQN agents")
    p.add_argument("--config", help="run configuration file (defaults if omitted)")
    p.add_argument("--algo", choices=ALGOS)
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int, help="override the configured episode count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="greedy evaluation of a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--config", help="defaults to config.cfg next to the checkpoint")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="train (if needed) and evaluate a baseline")
    p.add_argument("--kind", required=True, choices=[k.value for k in BaselineKind])
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int, help="override the configured training episodes")
    p.add_argument("--eval-episodes", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("compare", help="run a matrix of cells and summarise over seeds")
    p.add_argument("--spec", required=True)
    p.add_argument("--jobs", type=int, default=1, help="cells run in parallel processes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CliError, ConfigError) as exc:
        print(f"uavnoma {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
