"""Episode orchestration for shared (MDQN) and independent deep Q-learning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import noma
from .agent import (
    ActionCatalog, DqnLearner, LearnerConfig, abstract_states, epsilon, restrict_2d, select_action,
    state_size,
)
from .env import Env, EnvConfig
from .neural import copy_weights
from .seeding import stream

ALGOS = ("mdqn", "independent")
# evaluation worlds are drawn from episode indices disjoint from training ones
EVAL_EPISODE_OFFSET = 1_000_000


@dataclass
class TrainerConfig:
    episodes: int = 300
    algo: str = "mdqn"
    hidden: int = 40
    lr: float = 1e-3
    batch_size: int = 32
    buffer_capacity: int = 20000
    discount: float = 0.9
    target_sync: int = 200
    epsilon_start: float = 0.9
    seed: int = 0

    def validate(self) -> "TrainerConfig":
        from .env import ConfigError
        checks = [
            (self.episodes >= 1, "episodes must be at least 1"),
            (self.algo in ALGOS, f"algo must be one of {ALGOS}"),
            (self.hidden >= 1, "hidden must be at least 1"),
            (self.lr > 0, "lr must be positive"),
            (self.batch_size >= 1, "batch_size must be at least 1"),
            (self.buffer_capacity >= self.batch_size, "buffer_capacity must hold one batch"),
            (0 <= self.discount < 1, "discount must lie in [0, 1)"),
            (self.target_sync >= 1, "target_sync must be at least 1"),
            (0 <= self.epsilon_start <= 1, "epsilon_start must lie in [0, 1]"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    @property
    def learner(self) -> LearnerConfig:
        return LearnerConfig(self.hidden, self.lr, self.batch_size, self.buffer_capacity,
                             self.discount, self.target_sync)


def build_catalog(cfg: EnvConfig) -> ActionCatalog:
    catalog = ActionCatalog(cfg.gear_fractions, cfg.cap, cfg.power_budget,
                            equal_power=cfg.power_control == "equal" or cfg.access == "oma")
    return catalog if cfg.vertical_moves else restrict_2d(catalog)


@dataclass
class EpisodeResult:
    episode: int
    throughput_bits: float
    violation_rate: float
    epsilon: float
    losses: list = field(default_factory=list)
    sum_rates: list = field(default_factory=list)
    slots: list = field(default_factory=list)
    violations: dict = field(default_factory=dict)

    @property
    def mean_sum_rate(self) -> float:
        return float(np.mean(self.sum_rates))


class Trainer:
    """Owns the environment, the learners and the policy/sampling streams of one run."""

    def __init__(self, env_cfg: EnvConfig, train_cfg: TrainerConfig):
        self.env_cfg = env_cfg
        self.cfg = train_cfg.validate()
        self.env = Env(env_cfg)
        self.catalog = build_catalog(env_cfg)
        self.n_in = state_size(env_cfg.uav_count, env_cfg.cap)
        seed = train_cfg.seed
        n_learners = 1 if train_cfg.algo == "mdqn" else env_cfg.uav_count
        self.learners = [DqnLearner(self.n_in, self.catalog.size, train_cfg.learner,
                                    stream(seed, "init", i)) for i in range(n_learners)]
        self.policy_rng = stream(seed, "policy")
        self.sample_rng = stream(seed, "sampling")
        self.global_step = 0
        self.loss_log: list[tuple[int, float]] = []

    def learner(self, u: int) -> DqnLearner:
        return self.learners[0] if len(self.learners) == 1 else self.learners[u]

    def load_nets(self, nets) -> None:
        if len(nets) not in (1, len(self.learners)) or (len(nets) == 1 and len(self.learners) != 1
                                                         and self.cfg.algo == "mdqn"):
            raise ValueError(f"checkpoint holds {len(nets)} networks, run needs {len(self.learners)}")
        for i, learner in enumerate(self.learners):
            net = nets[i if len(nets) > 1 else 0]
            if net.sizes != (self.n_in, self.cfg.hidden, self.catalog.size):
                raise ValueError(f"checkpoint layer sizes {net.sizes} incompatible with "
                                 f"{(self.n_in, self.cfg.hidden, self.catalog.size)}")
            learner.eval_net = net
            learner.target_net = copy_weights(net)

    def states(self, world) -> list[np.ndarray]:
        cfg = self.env_cfg
        return abstract_states(world.uav_xyz, world.gains, world.serving, self.env.bounds, cfg.cap)

    def masks(self, world) -> list[np.ndarray]:
        sizes = world.cluster_sizes()
        return [self.catalog.mask(min(int(n), self.catalog.slots)) for n in sizes]

    def decode(self, actions) -> tuple[np.ndarray, np.ndarray]:
        moves = np.array([int(self.catalog.move_of(a)) for a in actions])
        powers = np.array([self.catalog.powers(a, self.catalog.slots) for a in actions])
        return moves, powers

    def run_episode(self, episode: int, eps: float | None = None, train: bool = True,
                    policy=None, world_episode: int | None = None, keep_slots: bool = False) -> EpisodeResult:
        """Play one episode of ``slots + 1`` slots.

        ``policy`` (a callable ``(env, world) -> (moves, slot_powers)``)
        replaces the learned epsilon-greedy agents, e.g. for baselines.
        """
        cfg = self.env_cfg
        if eps is None:
            eps = epsilon(episode, self.cfg.episodes, self.cfg.epsilon_start)
        world = self.env.reset(self.cfg.seed, episode if world_episode is None else world_episode)
        if policy is not None and hasattr(policy, "reset"):
            policy.reset(self.env, world)
        sum_rates, losses, slots = [], [], []
        qos_bad = 0
        totals = {"bounds": 0, "serving": 0, "power": 0, "sic_order": 0}
        states = masks = None
        while not self.env.done(world):
            if policy is None:
                states, masks = self.states(world), self.masks(world)
                actions = np.array([select_action(self.learner(u).q_values(states[u]), eps, masks[u],
                                                  self.policy_rng) for u in range(cfg.uav_count)])
                moves, slot_powers = self.decode(actions)
            else:
                actions = None
                moves, slot_powers = policy(self.env, world)
            rewards, log, _ = self.env.step(world, moves, slot_powers)
            sum_rates.append(log.sum_rate)
            qos_bad += log.qos_violations
            for k, n in log.violations.items():
                totals[k] += n
            if keep_slots:
                slots.append(log)
            if actions is not None and train:
                next_states, next_masks = self.states(world), self.masks(world)
                step_losses = []
                for u in range(cfg.uav_count):
                    learner = self.learner(u)
                    learner.store(states[u], actions[u], rewards[u], next_states[u], next_masks[u])
                    if learner.ready():
                        step_losses.append(learner.train(self.sample_rng))
                if step_losses:
                    loss = float(np.mean(step_losses))
                    losses.append((self.global_step, loss))
                    self.loss_log.append((self.global_step, loss))
                self.global_step += 1
        n_user_slots = len(sum_rates) * cfg.user_count
        return EpisodeResult(episode, noma.throughput(sum_rates), qos_bad / max(n_user_slots, 1), eps,
                             losses, sum_rates, slots, totals)

    def train(self, episodes: int | None = None, callback=None) -> list[EpisodeResult]:
        episodes = self.cfg.episodes if episodes is None else episodes
        results = []
        for ep in range(episodes):
            res = self.run_episode(ep)
            results.append(res)
            if callback is not None:
                callback(res)
        return results

    def evaluate(self, n_episodes: int, policy=None, keep_slots: bool = True) -> list[EpisodeResult]:
        """Greedy episodes (no exploration, no learning) on held-out worlds."""
        return [self.run_episode(i, eps=0.0, train=False, policy=policy,
                                 world_episode=EVAL_EPISODE_OFFSET + i, keep_slots=keep_slots)
                for i in range(n_episodes)]
