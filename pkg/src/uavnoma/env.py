"""Episodic multi-UAV NOMA offloading environment.

One call to :meth:`Env.step` advances a slot in this order: UAVs move,
users move, users are re-clustered when the schedule fires, fading and
gains are redrawn, decoding orders and rates are computed with the chosen
powers, each agent is rewarded with its own cluster's sum rate scaled by
``2**-lambda``, and the QoS penalty exponents are updated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel, clustering, noma
from .mobility import Bounds, Mobility, move_uavs, step_users
from .seeding import stream

MOBILITY_CHOICES = ("random", "directional", "mixed")


class ConfigError(ValueError):
    pass


@dataclass
class EnvConfig:
    uav_count: int = 3
    user_count: int = 6
    x_min: float = -200.0
    x_max: float = 200.0
    y_min: float = -200.0
    y_max: float = 200.0
    h_min: float = 50.0
    h_max: float = 150.0
    h_init: float = 100.0
    uav_speed: float = 10.0
    user_vmax: float = 2.0
    dt: float = 0.5
    slots: int = 200
    recluster_period: int = 50
    recluster: bool = True
    cluster_cap: int = 0
    power_budget: float = 0.5
    bandwidth: float = 1e6
    carrier_ghz: float = 2.0
    noise_psd_dbm_hz: float = -174.0
    fading: bool = True
    qos_rate: float = 1e5
    mobility: str = "random"
    gear_fractions: tuple = (0.1, 0.2, 0.3, 0.4)
    access: str = "noma"
    decoding: str = "dynamic"
    power_control: str = "gears"
    vertical_moves: bool = True
    reward_mode: str = "cluster"
    lambda_max: int = 8
    penalty_window: int = 20

    def __post_init__(self):
        self.gear_fractions = tuple(float(g) for g in self.gear_fractions)

    @property
    def bounds(self) -> Bounds:
        return Bounds(self.x_min, self.x_max, self.y_min, self.y_max, self.h_min, self.h_max)

    @property
    def cap(self) -> int:
        return self.cluster_cap or clustering.default_cap(self.user_count, self.uav_count)

    @property
    def noise_dbm(self) -> float:
        return channel.noise_power_dbm(self.bandwidth, self.noise_psd_dbm_hz)

    @property
    def sigma2(self) -> float:
        return float(channel.dbm_to_watts(self.noise_dbm))

    @property
    def channel_params(self) -> channel.ChannelParams:
        return channel.ChannelParams(self.carrier_ghz, self.noise_dbm, self.fading)

    def validate(self) -> "EnvConfig":
        checks = [
            (self.uav_count >= 1, "uav_count must be at least 1"),
            (self.user_count >= 1, "user_count must be at least 1"),
            (self.x_min < self.x_max and self.y_min < self.y_max, "area bounds are empty"),
            (self.h_min >= channel.MIN_ALTITUDE, f"h_min must be at least {channel.MIN_ALTITUDE} m"),
            (self.h_min <= self.h_init <= self.h_max, "h_init must lie in [h_min, h_max]"),
            (self.h_min < self.h_max, "altitude range is empty"),
            (self.dt > 0, "dt must be positive"),
            (self.slots >= 0, "slots must be non-negative"),
            (self.recluster_period >= 1, "recluster_period must be at least 1"),
            (self.recluster_period <= max(self.slots, 1), "recluster_period must not exceed slots"),
            (self.cap * self.uav_count >= self.user_count, "cluster_cap too small for user_count"),
            (self.power_budget > 0, "power_budget must be positive"),
            (self.bandwidth > 0, "bandwidth must be positive"),
            (self.carrier_ghz > 0, "carrier_ghz must be positive"),
            (self.qos_rate >= 0, "qos_rate must be non-negative"),
            (self.uav_speed >= 0 and self.user_vmax >= 0, "speeds must be non-negative"),
            (self.mobility in MOBILITY_CHOICES, f"mobility must be one of {MOBILITY_CHOICES}"),
            (len(self.gear_fractions) > 0 and all(0 < g <= 1 for g in self.gear_fractions),
             "gear_fractions must lie in (0, 1]"),
            (self.access in ("noma", "oma"), "access must be noma or oma"),
            (self.decoding in ("dynamic", "static"), "decoding must be dynamic or static"),
            (self.power_control in ("gears", "equal"), "power_control must be gears or equal"),
            (self.reward_mode in ("cluster", "global"), "reward_mode must be cluster or global"),
            (self.lambda_max >= 0, "lambda_max must be non-negative"),
            (self.penalty_window >= 1, "penalty_window must be at least 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


@dataclass
class PenaltyState:
    lam: int = 0
    lambda_max: int = 8
    window: int = 20
    clean_streak: int = 0
    violations: int = 0


def reward(rate_bps: float, violated: bool, penalty: PenaltyState):
    """Reward in Mbit/s for the current exponent, then the exponent update.

    A violating slot raises the exponent by one (up to ``lambda_max``);
    ``window`` consecutive clean slots lower it by one.
    """
    value = (rate_bps / 1e6) / 2.0**penalty.lam
    lam, streak, count = penalty.lam, penalty.clean_streak, penalty.violations
    if violated:
        lam = min(lam + 1, penalty.lambda_max)
        streak = 0
        count += 1
    else:
        streak += 1
        if streak >= penalty.window:
            lam = max(lam - 1, 0)
            streak = 0
    return value, PenaltyState(lam, penalty.lambda_max, penalty.window, streak, count)


@dataclass
class SlotLog:
    slot: int
    per_user_rate: np.ndarray
    sum_rate: float
    uav_xyz: np.ndarray
    moves: np.ndarray
    powers: np.ndarray
    rewards: np.ndarray
    lambdas: np.ndarray
    serving: np.ndarray
    qos_violations: int
    violations: dict = field(default_factory=dict)


@dataclass
class World:
    t: int
    uav_xyz: np.ndarray
    user_xy: np.ndarray
    models: np.ndarray
    thetas: np.ndarray
    serving: np.ndarray
    centroids: np.ndarray
    gains: np.ndarray
    penalties: list
    static_orders: list | None
    rng_mobility: np.random.Generator
    rng_fading: np.random.Generator
    rng_cluster: np.random.Generator

    def cluster(self, u: int) -> np.ndarray:
        return np.flatnonzero(self.serving == u)

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.serving, minlength=self.uav_xyz.shape[0])


def boundary_points(n: int, bounds: Bounds) -> np.ndarray:
    """``n`` points evenly spaced along the area perimeter (counter-clockwise)."""
    w = bounds.x_max - bounds.x_min
    d = bounds.y_max - bounds.y_min
    perimeter = 2 * (w + d)
    pts = []
    for i in range(n):
        s = (i + 0.5) / n * perimeter
        if s < w:
            pts.append((bounds.x_min + s, bounds.y_min))
        elif s < w + d:
            pts.append((bounds.x_max, bounds.y_min + s - w))
        elif s < 2 * w + d:
            pts.append((bounds.x_max - (s - w - d), bounds.y_max))
        else:
            pts.append((bounds.x_min, bounds.y_max - (s - 2 * w - d)))
    return np.array(pts)


class Env:
    def __init__(self, config: EnvConfig):
        self.config = config.validate()
        self.bounds = config.bounds
        self.params = config.channel_params
        self.sigma2 = config.sigma2

    # -- clustering -------------------------------------------------------
    def _cluster(self, world_uav, user_xy, rng, epoch):
        cfg = self.config
        assignment = clustering.kmeans_capped(user_xy, cfg.uav_count, cfg.cap, rng, epoch=epoch)
        owner = clustering.match_clusters(world_uav, assignment.centroids)
        serving = owner[assignment.labels]
        centroids = np.zeros((cfg.uav_count, 2))
        centroids[owner] = assignment.centroids
        return serving, centroids

    def _static_orders(self, gains, serving):
        users = np.arange(serving.size)
        own = gains[serving, users]
        return [noma.decoding_order(users[serving == u], own[serving == u])
                for u in range(self.config.uav_count)]

    def reset(self, seed: int, episode: int = 0) -> World:
        cfg = self.config
        b = self.bounds
        rng_place = stream(seed, "placement", episode)
        user_xy = np.column_stack([
            rng_place.uniform(b.x_min, b.x_max, cfg.user_count),
            rng_place.uniform(b.y_min, b.y_max, cfg.user_count),
        ])
        if cfg.mobility == "random":
            models = np.full(cfg.user_count, Mobility.RANDOM_ROAM)
        elif cfg.mobility == "directional":
            models = np.full(cfg.user_count, Mobility.DIRECTIONAL_WALK)
        else:
            models = np.where(np.arange(cfg.user_count) % 2 == 0,
                              Mobility.RANDOM_ROAM, Mobility.DIRECTIONAL_WALK)
        thetas = rng_place.uniform(0.0, 2.0 * np.pi, cfg.user_count)
        uav = np.column_stack([boundary_points(cfg.uav_count, b), np.full(cfg.uav_count, cfg.h_init)])
        rng_cluster = stream(seed, "cluster", episode)
        serving, centroids = self._cluster(uav, user_xy, rng_cluster, 0)
        rng_fading = stream(seed, "fading", episode)
        gains = channel.sample_channel(uav, user_xy, self.params, rng_fading).gain_linear
        penalties = [PenaltyState(0, cfg.lambda_max, cfg.penalty_window) for _ in range(cfg.uav_count)]
        static = self._static_orders(gains, serving) if cfg.decoding == "static" else None
        return World(0, uav, user_xy, models, thetas, serving, centroids, gains, penalties, static,
                     stream(seed, "mobility", episode), rng_fading, rng_cluster)

    def done(self, world: World) -> bool:
        return world.t > self.config.slots

    def assign_powers(self, world: World, slot_powers, prev_gains, serving) -> np.ndarray:
        """Map each UAV's per-slot powers onto its users (strongest previous gain first).

        Equal-power control ignores ``slot_powers``. A cluster that outgrew
        its gear tuple at a re-clustering is scaled back onto the budget.
        """
        cfg = self.config
        powers = np.zeros(cfg.user_count)
        for u in range(cfg.uav_count):
            members = np.flatnonzero(serving == u)
            if members.size == 0:
                continue
            if cfg.power_control == "equal" or cfg.access == "oma":
                powers[members] = cfg.power_budget / members.size
                continue
            ranked = members[np.argsort(-prev_gains[u, members], kind="stable")]
            p = np.asarray(slot_powers[u], dtype=float)
            chosen = np.zeros(members.size)
            take = min(members.size, p.size)
            chosen[:take] = p[:take]
            if take < members.size:
                chosen[take:] = np.min(p) if p.size else 0.0
            total = chosen.sum()
            if total > cfg.power_budget:
                chosen *= cfg.power_budget / total
            powers[ranked] = chosen
        return powers

    def step(self, world: World, moves, slot_powers):
        """Advance one slot; returns ``(rewards, log, rate_report)``. Mutates ``world``."""
        cfg = self.config
        t = world.t
        prev_gains = world.gains
        world.uav_xyz = move_uavs(world.uav_xyz, moves, cfg.uav_speed, cfg.dt, self.bounds)
        world.user_xy = step_users(world.user_xy, world.models, world.thetas, cfg.user_vmax, cfg.dt,
                                   world.rng_mobility, self.bounds)
        reclustered = False
        if cfg.recluster and t > 0 and clustering.recluster_schedule(t, cfg.recluster_period):
            world.serving, world.centroids = self._cluster(world.uav_xyz, world.user_xy,
                                                           world.rng_cluster, t)
            reclustered = True
        sample = channel.sample_channel(world.uav_xyz, world.user_xy, self.params, world.rng_fading)
        world.gains = sample.gain_linear
        if cfg.decoding == "static" and reclustered:
            world.static_orders = self._static_orders(world.gains, world.serving)
        powers = self.assign_powers(world, slot_powers, prev_gains, world.serving)
        if cfg.access == "oma":
            report = noma.oma_rates(world.gains, world.serving, cfg.power_budget, self.sigma2,
                                    cfg.bandwidth)
        else:
            report = noma.noma_rates(world.gains, world.serving, powers, self.sigma2, cfg.bandwidth,
                                     orders=world.static_orders)
        cluster_rate = report.cluster_sum(world.serving, cfg.uav_count)
        below = report.per_user_rate < cfg.qos_rate
        rewards = np.zeros(cfg.uav_count)
        for u in range(cfg.uav_count):
            r = report.sum_rate if cfg.reward_mode == "global" else cluster_rate[u]
            violated = bool(np.any(below[world.serving == u]))
            rewards[u], world.penalties[u] = reward(r, violated, world.penalties[u])
        log = SlotLog(
            slot=t,
            per_user_rate=report.per_user_rate,
            sum_rate=report.sum_rate,
            uav_xyz=world.uav_xyz.copy(),
            moves=np.asarray(moves, dtype=int).copy(),
            powers=powers,
            rewards=rewards,
            lambdas=np.array([p.lam for p in world.penalties]),
            serving=world.serving.copy(),
            qos_violations=int(below.sum()),
            violations=self.audit(world, powers, report),
        )
        world.t += 1
        return rewards, log, report

    def audit(self, world: World, powers, report) -> dict:
        """Count hard-constraint violations for the slot just computed."""
        cfg = self.config
        out_of_box = int(np.sum(np.any((world.uav_xyz < self.bounds.lower)
                                       | (world.uav_xyz > self.bounds.upper), axis=1)))
        v = noma.serving_matrix(world.serving, cfg.uav_count)
        unique = int(np.sum(v.sum(axis=0) != 1))
        if cfg.access == "oma":
            totals = np.where(world.cluster_sizes() > 0, cfg.power_budget, 0.0)
        else:
            totals = noma.uav_total_power(powers, world.serving, cfg.uav_count)
        budget = int(np.sum(totals > cfg.power_budget * (1 + 1e-12)))
        sic = 0
        if cfg.access == "noma":
            sic = sum(not noma.order_is_sic_valid(order, report.equivalent_gain)
                      for order in report.orders)
        return {"bounds": out_of_box, "serving": unique, "power": budget, "sic_order": int(sic)}
