"""Deep Q-learning machinery shared by all UAV agents.

In the shared (MDQN) mode every agent abstracts its observation into the
same standard layout, pushes its transitions into one replay buffer and
trains one evaluation/target network pair. In independent mode each agent
owns a private buffer and network pair of the same architecture.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .mobility import MoveAction
from .neural import AdamState, MlpParams, adam_step, copy_weights, forward, init_mlp, loss_and_grads

ALL_MOVES = tuple(MoveAction)
PLANAR_MOVES = (MoveAction.LEFT, MoveAction.RIGHT, MoveAction.FORWARD, MoveAction.BACKWARD,
                MoveAction.HOVER)

GAIN_DB_OFFSET = 130.0
GAIN_DB_SPAN = 60.0


class ActionCatalog:
    """Joint discrete actions: a flight move times one power gear per user slot.

    Index layout is ``move_index * n_power + power_index`` where power
    combinations enumerate ``itertools.product`` over the gears of each
    user slot. With ``equal_power`` there is a single power option that
    splits the budget evenly over the served users.
    """

    def __init__(self, gear_fractions=(0.1, 0.2, 0.3, 0.4), slots: int = 2, budget: float = 0.5,
                 moves=ALL_MOVES, equal_power: bool = False):
        self.moves = tuple(MoveAction(m) for m in moves)
        self.slots = int(slots)
        self.budget = float(budget)
        self.equal_power = bool(equal_power)
        self.gears = np.asarray(gear_fractions, dtype=float) * budget
        if self.equal_power:
            self.combos = np.zeros((1, self.slots), dtype=int)
        else:
            self.combos = np.array(list(itertools.product(range(self.gears.size), repeat=self.slots)),
                                   dtype=int).reshape(-1, self.slots)
        self._mask_cache = {}

    @property
    def n_power(self) -> int:
        return self.combos.shape[0]

    @property
    def size(self) -> int:
        return len(self.moves) * self.n_power

    def decode(self, index: int) -> tuple[MoveAction, int]:
        m, p = divmod(int(index), self.n_power)
        return self.moves[m], p

    def move_of(self, index: int) -> MoveAction:
        return self.moves[int(index) // self.n_power]

    def powers(self, index: int, n_users: int) -> np.ndarray:
        """Transmit power of each served user slot (watts), length ``n_users``."""
        if n_users == 0:
            return np.zeros(0)
        if self.equal_power:
            return np.full(n_users, self.budget / n_users)
        combo = self.combos[int(index) % self.n_power]
        return self.gears[combo[:n_users]]

    def mask(self, n_users: int) -> np.ndarray:
        """Valid actions for a cluster of ``n_users``.

        Gear tuples over the budget are invalid, and gears of empty slots are
        pinned to the first gear so no two valid actions coincide.
        """
        if n_users not in self._mask_cache:
            if self.equal_power:
                ok = np.ones(1, dtype=bool)
            else:
                used = self.combos[:, :n_users]
                total = self.gears[used].sum(axis=1)
                ok = total <= self.budget * (1 + 1e-12)
                ok &= np.all(self.combos[:, n_users:] == 0, axis=1)
            self._mask_cache[n_users] = np.tile(ok, len(self.moves))
        return self._mask_cache[n_users]


def restrict_2d(catalog: ActionCatalog) -> ActionCatalog:
    """Same catalog with vertical moves removed."""
    gears = catalog.gears / catalog.budget
    return ActionCatalog(gears, catalog.slots, catalog.budget,
                         moves=[m for m in catalog.moves if m not in (MoveAction.UP, MoveAction.DOWN)],
                         equal_power=catalog.equal_power)


def state_size(n_uavs: int, slots: int) -> int:
    return 3 + 3 * (n_uavs - 1) + slots + (n_uavs - 1) * slots


def scale_gain(g):
    g = np.asarray(g, dtype=float)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(g)
    return np.clip((db + GAIN_DB_OFFSET) / GAIN_DB_SPAN, 0.0, 1.0)


def abstract_states(uav_xyz, gains, serving, bounds, slots: int) -> list[np.ndarray]:
    """:func:`abstract_state` for every agent, sharing the scaling work."""
    uav_xyz = np.asarray(uav_xyz, dtype=float)
    serving = np.asarray(serving, dtype=int)
    n_uavs = uav_xyz.shape[0]
    pos = (uav_xyz - bounds.lower) / (bounds.upper - bounds.lower)
    scaled = scale_gain(gains)
    blocks = np.zeros((n_uavs, slots))
    for s in range(n_uavs):
        g = np.sort(scaled[s, serving == s])[::-1][:slots]
        blocks[s, : g.size] = g
    out = []
    for u in range(n_uavs):
        order = [u] + [s for s in range(n_uavs) if s != u]
        out.append(np.concatenate([pos[order].ravel(), blocks[order].ravel()]))
    return out


def abstract_state(uav_xyz, gains, serving, u: int, bounds, slots: int) -> np.ndarray:
    """Standard input array for agent ``u``.

    Layout: own position, other UAV positions in ascending id, own users'
    gains (descending), then each other UAV's users' gains from that UAV
    (by UAV id, descending gain). Positions are min-max scaled to the
    service volume; gains use :func:`scale_gain`. Unused user slots are 0.
    """
    uav_xyz = np.asarray(uav_xyz, dtype=float)
    gains = np.asarray(gains, dtype=float)
    serving = np.asarray(serving, dtype=int)
    n_uavs = uav_xyz.shape[0]
    lo, hi = bounds.lower, bounds.upper
    pos = (uav_xyz - lo) / (hi - lo)
    order = [u] + [s for s in range(n_uavs) if s != u]
    out = np.zeros(state_size(n_uavs, slots))
    out[: 3 * n_uavs] = pos[order].ravel()
    base = 3 * n_uavs
    for j, s in enumerate(order):
        g = np.sort(gains[s, serving == s])[::-1][:slots]
        out[base + j * slots: base + j * slots + g.size] = scale_gain(g)
    return out


class ReplayBuffer:
    """Fixed-capacity ring of ``(s, a, r, s', valid-mask of s')`` records."""

    def __init__(self, capacity: int, n_in: int, n_actions: int):
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, n_in))
        self.a = np.zeros(capacity, dtype=int)
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, n_in))
        self.mask2 = np.zeros((capacity, n_actions), dtype=bool)
        self.size = 0
        self.pos = 0

    def __len__(self):
        return self.size

    def push(self, s, a, r, s2, mask2):
        i = self.pos
        self.s[i], self.a[i], self.r[i], self.s2[i], self.mask2[i] = s, a, r, s2, mask2
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch: int, rng) -> np.ndarray:
        if self.size < batch:
            raise ValueError(f"buffer holds {self.size} transitions, batch needs {batch}")
        return rng.integers(0, self.size, size=batch)

    def sample(self, batch: int, rng):
        idx = self.sample_indices(batch, rng)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.mask2[idx]


def epsilon(episode: int, total: int, start: float = 0.9) -> float:
    """Linear decay from ``start`` at the first episode to 0 at the last."""
    frac = episode / max(total - 1, 1)
    return float(np.clip(start * (1.0 - frac), 0.0, start))


def select_action(q_values, eps: float, mask, rng) -> int:
    """Epsilon-greedy over the valid actions; greedy ties go to the lowest index.

    Exactly one uniform draw is made before deciding, plus one more when
    exploring, so the policy stream advances identically at any epsilon.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("no valid action")
    if rng.random() < eps:
        valid = np.flatnonzero(mask)
        return int(valid[rng.integers(valid.size)])
    return int(np.argmax(np.where(mask, q_values, -np.inf)))


def td_targets(target_net: MlpParams, rewards, next_states, next_masks, discount: float):
    q_next = forward(target_net, next_states)
    best = np.where(next_masks, q_next, -np.inf).max(axis=1)
    return np.asarray(rewards, dtype=float) + discount * best


def train_step(eval_net: MlpParams, target_net: MlpParams, adam: AdamState, buffer: ReplayBuffer,
               batch: int, discount: float, rng) -> float:
    s, a, r, s2, m2 = buffer.sample(batch, rng)
    y = td_targets(target_net, r, s2, m2, discount)
    loss, grads = loss_and_grads(eval_net, s, a, y)
    adam_step(eval_net, adam, grads)
    return loss


@dataclass
class LearnerConfig:
    hidden: int = 40
    lr: float = 1e-3
    batch_size: int = 32
    buffer_capacity: int = 20000
    discount: float = 0.9
    target_sync: int = 200


class DqnLearner:
    """An evaluation/target network pair with its replay buffer and optimiser."""

    def __init__(self, n_in: int, n_actions: int, cfg: LearnerConfig, init_rng):
        self.cfg = cfg
        self.eval_net = init_mlp(n_in, cfg.hidden, n_actions, init_rng)
        self.target_net = copy_weights(self.eval_net)
        self.adam = AdamState.zeros_like(self.eval_net, lr=cfg.lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, n_in, n_actions)
        self.train_steps = 0

    def q_values(self, state) -> np.ndarray:
        return forward(self.eval_net, state)

    def store(self, s, a, r, s2, mask2):
        self.buffer.push(s, a, r, s2, mask2)

    def ready(self) -> bool:
        return len(self.buffer) >= self.cfg.batch_size

    def train(self, rng) -> float:
        loss = train_step(self.eval_net, self.target_net, self.adam, self.buffer,
                          self.cfg.batch_size, self.cfg.discount, rng)
        self.train_steps += 1
        self.sync_target()
        return loss

    def sync_target(self) -> bool:
        if self.train_steps % self.cfg.target_sync == 0:
            self.target_net = copy_weights(self.eval_net)
            return True
        return False
