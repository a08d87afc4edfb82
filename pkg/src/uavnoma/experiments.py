"""Experiment cells and their CSV outputs.

A cell is one run kind (``mdqn``, ``independent`` or a baseline kind)
under one master seed: optional training followed by greedy evaluation.

CSV schemas (header row, ``\\n`` line endings, ``repr`` floats):

* ``episodes.csv``: ``episode, throughput_bits, violation_rate, epsilon``
* ``loss.csv``: ``step, loss`` where ``step`` counts environment slots
* ``slots.csv``: ``slot, sum_rate, rate_0 .. rate_{K-1}, lambda``, each value
  averaged over the evaluation episodes (``lambda`` also over UAVs)
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineKind, CircularPolicy, RandomPolicy, baseline_config, needs_training
from .config import dump_config
from .env import EnvConfig
from .neural import save_checkpoint
from .trainer import ALGOS, EpisodeResult, Trainer, TrainerConfig

RUN_KINDS = ALGOS + tuple(k.value for k in BaselineKind)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(int(x)) if isinstance(x, (int, np.integer)) else str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(rows[0]))


def write_episodes(path, results) -> None:
    write_csv(path, ["episode", "throughput_bits", "violation_rate", "epsilon"],
              [(r.episode, r.throughput_bits, r.violation_rate, r.epsilon) for r in results])


def write_loss(path, loss_log) -> None:
    write_csv(path, ["step", "loss"], loss_log)


def slot_table(results: list[EpisodeResult], user_count: int) -> np.ndarray:
    """Per-slot averages over episodes: columns as in ``slots.csv``."""
    n_slots = min(len(r.slots) for r in results)
    table = np.zeros((n_slots, 3 + user_count))
    for t in range(n_slots):
        logs = [r.slots[t] for r in results]
        table[t, 0] = t
        table[t, 1] = np.mean([log.sum_rate for log in logs])
        table[t, 2:2 + user_count] = np.mean([log.per_user_rate for log in logs], axis=0)
        table[t, -1] = np.mean([log.lambdas for log in logs])
    return table


def write_slots(path, results, user_count: int) -> None:
    header = ["slot", "sum_rate"] + [f"rate_{k}" for k in range(user_count)] + ["lambda"]
    table = slot_table(results, user_count)
    write_csv(path, header, [[int(row[0])] + list(row[1:]) for row in table])


@dataclass
class RunManifest:
    command: str
    config: str
    version: str
    seeds: list
    start_time: str
    outputs: list = field(default_factory=list)

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2) + "\n", encoding="utf-8")
        return path


def start_manifest(command, env_cfg, train_cfg, seeds, out_dir, outputs) -> RunManifest:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command, dump_config(env_cfg, train_cfg), __version__, list(seeds),
                           time.strftime("%Y-%m-%dT%H:%M:%S%z"), sorted(outputs))
    manifest.write(out)
    return manifest


@dataclass
class CellResult:
    run: str
    seed: int
    env_cfg: EnvConfig
    train_results: list
    loss_log: list
    eval_results: list
    trainer: Trainer

    @property
    def eval_rate(self) -> float:
        """Mean greedy sum rate (bit/s) per slot over the evaluation episodes."""
        return float(np.mean([r.mean_sum_rate for r in self.eval_results]))

    @property
    def hard_violations(self) -> int:
        return sum(sum(r.violations.values()) for r in self.train_results + self.eval_results)


def cell_configs(run: str, env_cfg: EnvConfig, train_cfg: TrainerConfig, seed: int):
    if run not in RUN_KINDS:
        raise ValueError(f"unknown run kind {run!r}; choose from {', '.join(RUN_KINDS)}")
    if run in ALGOS:
        return env_cfg, replace(train_cfg, algo=run, seed=seed)
    return baseline_config(run, env_cfg), replace(train_cfg, algo="mdqn", seed=seed)


def run_cell(run: str, env_cfg: EnvConfig, train_cfg: TrainerConfig, seed: int,
             eval_episodes: int, callback=None) -> CellResult:
    env_cfg, train_cfg = cell_configs(run, env_cfg, train_cfg, seed)
    trainer = Trainer(env_cfg, train_cfg)
    policy = None
    train_results = []
    if run in ALGOS or needs_training(run):
        train_results = trainer.train(callback=callback)
    elif run == BaselineKind.CIRCULAR.value:
        policy = CircularPolicy()
    else:
        policy = RandomPolicy(trainer, trainer.policy_rng)
    evals = trainer.evaluate(eval_episodes, policy=policy, keep_slots=True) if eval_episodes else []
    return CellResult(run, seed, env_cfg, train_results, list(trainer.loss_log), evals, trainer)


def write_cell(cell: CellResult, out_dir) -> list[str]:
    """Write the CSVs (and checkpoint, when trained) of one cell; returns file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if cell.train_results:
        write_episodes(out / "episodes.csv", cell.train_results)
        write_loss(out / "loss.csv", cell.loss_log)
        save_checkpoint(out / "checkpoint.txt", [l.eval_net for l in cell.trainer.learners])
        written += ["episodes.csv", "loss.csv", "checkpoint.txt"]
    if cell.eval_results:
        write_episodes(out / "eval_episodes.csv", cell.eval_results)
        write_slots(out / "slots.csv", cell.eval_results, cell.env_cfg.user_count)
        written += ["eval_episodes.csv", "slots.csv"]
    return written
