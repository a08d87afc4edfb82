"""Ground-user motion and UAV kinematics inside the service volume."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class Mobility(enum.IntEnum):
    RANDOM_ROAM = 0
    DIRECTIONAL_WALK = 1


class MoveAction(enum.IntEnum):
    LEFT = 0
    RIGHT = 1
    FORWARD = 2
    BACKWARD = 3
    UP = 4
    DOWN = 5
    HOVER = 6


# unit displacement (dx, dy, dh) per flight action
MOVE_VECTORS = np.array(
    [
        [-1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [0.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class Bounds:
    x_min: float = -200.0
    x_max: float = 200.0
    y_min: float = -200.0
    y_max: float = 200.0
    h_min: float = 50.0
    h_max: float = 150.0

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.h_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max, self.h_max])

    def contains(self, xyz) -> bool:
        xyz = np.asarray(xyz, dtype=float)
        if xyz.shape[-1] == 2:
            return bool(np.all((xyz >= self.lower[:2]) & (xyz <= self.upper[:2])))
        return bool(np.all((xyz >= self.lower) & (xyz <= self.upper)))


@dataclass(frozen=True)
class UserState:
    id: int
    x: float
    y: float
    model: Mobility = Mobility.RANDOM_ROAM
    theta_fixed: float = 0.0


@dataclass(frozen=True)
class UavState:
    id: int
    x: float
    y: float
    h: float
    speed: float = 10.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.h])


def user_displacements(models, thetas, v_max: float, dt: float, rng) -> np.ndarray:
    """Draw one slot of displacement for every user, shape ``(K, 2)``.

    Random roamers move at speed ``U(0, v_max)`` along ``U(0, 2pi)``.
    Directional walkers add a fixed vector of length ``0.8 v_max`` along
    their own heading to a random vector of length ``U(0, 0.2 v_max)``.
    The draw order (angles, then speeds) is fixed for reproducibility.
    """
    models = np.asarray(models)
    thetas = np.asarray(thetas, dtype=float)
    n = models.shape[0]
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
    directional = models == Mobility.DIRECTIONAL_WALK
    top = np.where(directional, 0.2 * v_max, v_max)
    speed = rng.uniform(0.0, 1.0, size=n) * top
    dx = speed * np.cos(angle)
    dy = speed * np.sin(angle)
    drift = np.where(directional, 0.8 * v_max, 0.0)
    dx = dx + drift * np.cos(thetas)
    dy = dy + drift * np.sin(thetas)
    return np.column_stack([dx, dy]) * dt


def step_users(xy, models, thetas, v_max: float, dt: float, rng, bounds: Bounds) -> np.ndarray:
    """Advance all users by one slot and clip them to the area."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    new = np.asarray(xy, dtype=float) + user_displacements(models, thetas, v_max, dt, rng)
    new[:, 0] = np.clip(new[:, 0], bounds.x_min, bounds.x_max)
    new[:, 1] = np.clip(new[:, 1], bounds.y_min, bounds.y_max)
    return new


def step_user(u: UserState, dt: float, rng, v_max: float = 2.0, bounds: Bounds = Bounds()) -> UserState:
    xy = step_users([[u.x, u.y]], [u.model], [u.theta_fixed], v_max, dt, rng, bounds)
    return replace(u, x=float(xy[0, 0]), y=float(xy[0, 1]))


def move_uavs(positions, actions, speed: float, dt: float, bounds: Bounds) -> np.ndarray:
    """Vectorised flight step: one axis-aligned move of ``speed*dt`` per UAV, then clip."""
    positions = np.asarray(positions, dtype=float)
    step = MOVE_VECTORS[np.asarray(actions, dtype=int)] * (speed * dt)
    return np.clip(positions + step, bounds.lower, bounds.upper)


def move_uav(s: UavState, action: MoveAction, dt: float, bounds: Bounds = Bounds()) -> UavState:
    x, y, h = move_uavs(s.position[None, :], [int(action)], s.speed, dt, bounds)[0]
    return replace(s, x=float(x), y=float(y), h=float(h))
