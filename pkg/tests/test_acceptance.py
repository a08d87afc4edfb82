"""Acceptance criteria, each checked at its stated tolerance.

Training cells are shared across criteria through a session cache, so the
heavy runs (three seeds of every trained variant at desk scale) happen once.
"""

import math
import time
from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from conftest import record
from uavnoma import noma
from uavnoma.channel import los_breakpoints, p_los, path_loss_db
from uavnoma.cli import main
from uavnoma.clustering import kmeans_capped, sse
from uavnoma.env import Env, EnvConfig
from uavnoma.experiments import run_cell, slot_table
from uavnoma.metrics import steps_to_threshold, trend_slope
from uavnoma.neural import MlpParams, backward, forward
from uavnoma.trainer import TrainerConfig

from test_clustering import exhaustive_optimum, random_instance

SEEDS = (0, 1, 2)
EPISODES = 300
EVAL_EPISODES = 20
DESK = EnvConfig(uav_count=3, user_count=6, slots=200)
WALKERS = replace(DESK, mobility="directional")


@lru_cache(maxsize=None)
def cell(run: str, seed: int, mobility: str = "random"):
    env = DESK if mobility == "random" else WALKERS
    return run_cell(run, env, TrainerConfig(episodes=EPISODES), seed, EVAL_EPISODES)


def mean_rate(run, mobility="random"):
    return float(np.mean([cell(run, s, mobility).eval_rate for s in SEEDS]))


# 1 -----------------------------------------------------------------------

def oracle_path_loss(h, d, fc):
    los = 30.9 + (22.25 - 0.5 * math.log10(h)) * math.log10(d) + 20 * math.log10(fc)
    nlos = 32.4 + (43.2 - 7.6 * math.log10(h)) * math.log10(d) + 20 * math.log10(fc)
    return los, max(los, nlos)


def oracle_p_los(h, r):
    d0 = max(294.05 * math.log10(h) - 432.94, 18.0)
    p1 = 233.98 * math.log10(h) - 0.95
    return 1.0 if r <= d0 else min(1.0, d0 / r + math.exp(-r / p1 + d0 / p1)), d0, p1


def test_criterion_1_channel_oracles():
    start = time.perf_counter()
    los, nlos = path_loss_db(100.0, 200.0, 2.0)
    o_los, o_nlos = oracle_path_loss(100.0, 200.0, 2.0)
    d0, p1 = los_breakpoints(100.0)
    o_p, o_d0, o_p1 = oracle_p_los(100.0, 500.0)
    p = float(p_los(100.0, math.hypot(100.0, 500.0)))
    elapsed = time.perf_counter() - start
    checks = [
        abs(los - 85.82) <= 0.01, abs(nlos - 102.85) <= 0.01,
        abs(los - o_los) <= 1e-9, abs(nlos - o_nlos) <= 1e-9,
        abs(d0 - 155.16) <= 0.01, abs(p1 - 467.01) <= 0.01,
        abs(d0 - o_d0) <= 1e-9, abs(p1 - o_p1) <= 1e-9,
        abs(p - 0.78827) <= 1e-4, abs(p - o_p) <= 1e-12,
        elapsed < 1.0,
    ]
    ok = all(checks)
    record(1, ok, f"L=({los:.4f}, {nlos:.4f}) dB, d0={d0:.3f}, p1={p1:.3f}, "
                  f"P_LoS={p:.6f}, {elapsed * 1e3:.1f} ms")
    assert ok


# 2 -----------------------------------------------------------------------

def test_criterion_2_gradient_check():
    start = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    h = 1e-5
    for _ in range(100):
        n_in, n_hidden, n_out = 6, 40, 8
        p = MlpParams(rng.normal(size=(n_hidden, n_in)), rng.normal(size=n_hidden),
                      rng.normal(size=(n_out, n_hidden)) * 0.3, rng.normal(size=n_out))
        s, a, y = rng.normal(size=n_in), int(rng.integers(n_out)), float(rng.normal())
        g = backward(p, s, a, y).flat
        num = np.empty_like(g)
        for i in range(p.flat.size):
            old = p.flat[i]
            p.flat[i] = old + h
            up = (y - forward(p, s)[a]) ** 2
            p.flat[i] = old - h
            down = (y - forward(p, s)[a]) ** 2
            p.flat[i] = old
            num[i] = (up - down) / (2 * h)
        rel = np.abs(g - num) / np.maximum(np.abs(g) + np.abs(num), 1e-7)
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 10.0
    record(2, ok, f"max relative error {worst:.2e} over 100 draws, {elapsed:.1f} s")
    assert ok


# 3 -----------------------------------------------------------------------

def test_criterion_3_noma_sic_properties():
    cfg = replace(DESK, slots=200)
    env = Env(cfg)
    rng = np.random.default_rng(3)
    slots = bad_order = bad_top = 0
    for ep in range(10):
        world = env.reset(99, ep)
        while not env.done(world):
            moves = rng.integers(0, 7, cfg.uav_count)
            gears = rng.choice(cfg.gear_fractions, (cfg.uav_count, cfg.cap)) * cfg.power_budget
            _, log, report = env.step(world, moves, gears)
            slots += 1
            for order in report.orders:
                bad_order += not noma.order_is_sic_valid(order, report.equivalent_gain)
                if len(order):
                    own = world.gains[log.serving[order], order]
                    bad_top += noma.intra_cluster_interference(own, log.powers[order])[-1] != 0.0
    # single user: NOMA, OMA and the Shannon rate coincide
    worst = 0.0
    for _ in range(200):
        g = 10.0 ** rng.uniform(-13, -7, (1, 1))
        n = noma.noma_rates(g, np.array([0]), np.array([0.5]), cfg.sigma2, cfg.bandwidth).sum_rate
        o = noma.oma_rates(g, np.array([0]), 0.5, cfg.sigma2, cfg.bandwidth).sum_rate
        s = cfg.bandwidth * math.log2(1 + g[0, 0] * 0.5 / cfg.sigma2)
        worst = max(worst, abs(n - s) / s, abs(o - s) / s)
    ok = bad_order == 0 and bad_top == 0 and worst <= 1e-12
    record(3, ok, f"{slots} fuzz slots: {bad_order} order breaks, {bad_top} nonzero top-user "
                  f"interference; single-user worst rel diff {worst:.1e}")
    assert ok


# 4 -----------------------------------------------------------------------

def test_criterion_4_clustering_vs_exhaustive():
    rng = np.random.default_rng(4)
    worst, within, invariants = 0.0, 0, True
    for _ in range(50):
        pts, k, cap = random_instance(rng)
        a = kmeans_capped(pts, k, cap, rng)
        ratio = sse(pts, a.labels, a.centroids) / exhaustive_optimum(pts, k, cap)
        worst = max(worst, ratio)
        within += ratio <= 1.1 + 1e-12
        v = a.v
        invariants &= bool(np.all(v.sum(axis=0) == 1) and np.all(a.sizes() <= cap))
    ok = within == 50 and invariants
    record(4, ok, f"{within}/50 within 10% of optimum (worst ratio {worst:.4f}); invariants "
                  f"{'exact' if invariants else 'BROKEN'}")
    assert ok


# 5 -----------------------------------------------------------------------

def test_criterion_5_mdqn_converges_faster():
    ratios = []
    for seed in SEEDS:
        steps = {}
        for run in ("mdqn", "independent"):
            log = np.array(cell(run, seed).loss_log)
            steps[run] = steps_to_threshold(log[:, 0], log[:, 1])
        ratios.append(steps["independent"] / steps["mdqn"])
    wins = sum(r >= 1.5 for r in ratios)
    ok = wins >= 2
    record(5, ok, "independent/MDQN steps-to-threshold ratios "
                  + ", ".join(f"{r:.2f}" for r in ratios) + f" ({wins}/3 >= 1.5)")
    assert ok


# 6 -----------------------------------------------------------------------

def test_criterion_6_noma_beats_oma():
    n, o = mean_rate("mdqn"), mean_rate("oma")
    margin = n / o - 1
    ok = margin >= 0.05
    record(6, ok, f"NOMA {n / 1e6:.3f} vs OMA {o / 1e6:.3f} Mbit/s per slot, margin {margin:+.1%}")
    assert ok


# 7 -----------------------------------------------------------------------

def test_criterion_7_trajectory_ablation():
    full, circ, flat = mean_rate("mdqn"), mean_rate("circular"), mean_rate("2d")
    ok = full >= 1.3 * circ and full >= 1.1 * flat
    record(7, ok, f"3D {full / 1e6:.3f}, circular {circ / 1e6:.3f} (x{full / circ:.2f}), "
                  f"2D {flat / 1e6:.3f} (x{full / flat:.2f}) Mbit/s")
    assert ok


# 8 -----------------------------------------------------------------------

def final_quarter(table):
    n = table.shape[0]
    return table[n - n // 4:, 1]


def test_criterion_8_reclustering_sustains_rate():
    wins, tables = 0, []
    for seed in SEEDS:
        on = slot_table(cell("mdqn", seed, "directional").eval_results, DESK.user_count)
        off = slot_table(cell("no-recluster", seed, "directional").eval_results, DESK.user_count)
        wins += final_quarter(on).mean() >= final_quarter(off).mean()
        tables.append(off)
    slope = trend_slope(final_quarter(np.mean(tables, axis=0)))
    ok = wins >= 2 and slope < 0
    record(8, ok, f"re-clustered final quarter >= fixed clusters in {wins}/3 seeds; fixed-cluster "
                  f"final-quarter slope {slope / 1e3:+.2f} kbit/s per slot")
    assert ok


# 9 -----------------------------------------------------------------------

def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("slots = 20\nrecluster_period = 10\n[train]\nepisodes = 3\n")
    spec = tmp_path / "cmp.cfg"
    spec.write_text("[compare]\nruns = mdqn, independent, circular\nseeds = 0, 1\neval_episodes = 2\n"
                    "slots = 20\nrecluster_period = 10\nepisodes = 3\n")
    commands = {
        "train": ["train", "--config", str(cfg), "--seed", "7"],
        "baseline": ["baseline", "--kind", "2d", "--config", str(cfg), "--eval-episodes", "2"],
        "compare": ["compare", "--spec", str(spec)],
    }
    mismatched = []
    for name, argv in commands.items():
        for rep in ("a", "b"):
            assert main(argv + ["--out", str(tmp_path / name / rep)]) == 0
    ckpt = tmp_path / "train" / "a" / "checkpoint.txt"
    for rep in ("a", "b"):
        assert main(["eval", "--checkpoint", str(ckpt), "--episodes", "2",
                     "--out", str(tmp_path / "eval" / rep)]) == 0
    n_files = 0
    for name in list(commands) + ["eval"]:
        for f in sorted((tmp_path / name / "a").rglob("*.csv")):
            twin = tmp_path / name / "b" / f.relative_to(tmp_path / name / "a")
            n_files += 1
            if f.read_bytes() != twin.read_bytes():
                mismatched.append(str(f.relative_to(tmp_path)))
    ok = not mismatched and n_files > 0
    record(9, ok, f"{n_files} CSV files across train/eval/baseline/compare, "
                  f"{len(mismatched)} differ")
    assert ok


# 10 ----------------------------------------------------------------------

def test_criterion_10_zero_hard_violations():
    cells = [cell(run, s) for run in ("mdqn", "independent", "oma", "2d", "circular") for s in SEEDS]
    cells += [cell(run, s, "directional") for run in ("mdqn", "no-recluster") for s in SEEDS]
    totals = {}
    for c in cells:
        for r in c.train_results + c.eval_results:
            for k, v in r.violations.items():
                totals[k] = totals.get(k, 0) + v
    ok = all(v == 0 for v in totals.values())
    record(10, ok, f"{len(cells)} runs, violation counts {totals}")
    assert ok
