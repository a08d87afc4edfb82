"""Reference policies and single-axis ablations of the full method."""

from __future__ import annotations

import enum
from dataclasses import replace

import numpy as np

from .agent import PLANAR_MOVES
from .env import EnvConfig
from .mobility import MOVE_VECTORS, MoveAction


class BaselineKind(str, enum.Enum):
    CIRCULAR = "circular"
    MDQN_2D = "2d"
    OMA = "oma"
    EQUAL_POWER = "equal-power"
    STATIC_DECODING = "static-decoding"
    NO_RECLUSTER = "no-recluster"
    CHAOTIC = "chaotic"


def baseline_config(kind, cfg: EnvConfig) -> EnvConfig:
    """Environment config for a baseline; exactly one axis differs from ``cfg``."""
    kind = BaselineKind(kind)
    if kind is BaselineKind.MDQN_2D:
        return replace(cfg, vertical_moves=False)
    if kind is BaselineKind.OMA:
        return replace(cfg, access="oma")
    if kind in (BaselineKind.EQUAL_POWER, BaselineKind.CIRCULAR):
        return replace(cfg, power_control="equal")
    if kind is BaselineKind.STATIC_DECODING:
        return replace(cfg, decoding="static")
    if kind is BaselineKind.NO_RECLUSTER:
        return replace(cfg, recluster=False)
    return cfg


def needs_training(kind) -> bool:
    return BaselineKind(kind) not in (BaselineKind.CIRCULAR, BaselineKind.CHAOTIC)


class CircularPolicy:
    """Fly a discretised circle around the centroid of each UAV's cluster.

    Waypoints sit ``radius`` metres from the centroid and advance by
    ``angular_step`` radians whenever no planar move brings the UAV closer
    to the current one. Altitude is never changed and power is split
    equally (the environment must use equal power control).
    """

    def __init__(self, radius: float = 50.0, angular_step: float | None = None):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.angular_step = angular_step
        self.phase = None
        self.laps = None

    def reset(self, env, world):
        rel = world.uav_xyz[:, :2] - world.centroids
        self.phase = np.arctan2(rel[:, 1], rel[:, 0])
        self.laps = np.zeros(world.uav_xyz.shape[0])

    def step_angle(self, env) -> float:
        if self.angular_step is not None:
            return self.angular_step
        return env.config.uav_speed * env.config.dt / self.radius

    def waypoint(self, world, u: int) -> np.ndarray:
        c = world.centroids[u]
        return c + self.radius * np.array([np.cos(self.phase[u]), np.sin(self.phase[u])])

    def best_move(self, xy, target, step: float, bounds) -> MoveAction:
        # candidates are scored after clipping, so a wall never traps the UAV
        lo, hi = bounds.lower[:2], bounds.upper[:2]
        best, best_d = MoveAction.HOVER, np.hypot(*(xy - target))
        for m in PLANAR_MOVES:
            d = np.hypot(*(np.clip(xy + MOVE_VECTORS[m, :2] * step, lo, hi) - target))
            if d < best_d - 1e-9:
                best, best_d = m, d
        return best

    def __call__(self, env, world):
        if self.phase is None:
            self.reset(env, world)
        cfg = env.config
        step = cfg.uav_speed * cfg.dt
        dphi = self.step_angle(env)
        moves = np.empty(cfg.uav_count, dtype=int)
        for u in range(cfg.uav_count):
            xy = world.uav_xyz[u, :2]
            move = self.best_move(xy, self.waypoint(world, u), step, env.bounds)
            if move is MoveAction.HOVER and dphi != 0:
                self.phase[u] += dphi
                self.laps[u] += dphi / (2 * np.pi)
                move = self.best_move(xy, self.waypoint(world, u), step, env.bounds)
            moves[u] = int(move)
        return moves, np.zeros((cfg.uav_count, 1))


class RandomPolicy:
    """Uniformly random valid actions: the nearest analog of an unplanned deployment."""

    def __init__(self, trainer, rng):
        self.trainer = trainer
        self.rng = rng

    def __call__(self, env, world):
        masks = self.trainer.masks(world)
        actions = [int(self.rng.choice(np.flatnonzero(m))) for m in masks]
        return self.trainer.decode(actions)
