"""Train the shared-network agents briefly and compare with fixed policies.

A short run (default 60 episodes of 100 slots) is enough to see the UAVs
start trading altitude for link quality. Pass a larger episode count as
the first argument for a closer look; the acceptance runs use 300.

Run: python3 demos/03_train_mdqn.py [episodes]
"""

import sys

import numpy as np

from uavnoma import EnvConfig, Trainer, TrainerConfig
from uavnoma.baselines import CircularPolicy, baseline_config

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 60
env_cfg = EnvConfig(slots=100, recluster_period=25)
trainer = Trainer(env_cfg, TrainerConfig(episodes=episodes, seed=0))


def report(res):
    if res.episode % 10 == 0 or res.episode == episodes - 1:
        print(f"  episode {res.episode:3d}  eps {res.epsilon:4.2f}  "
              f"mean sum rate {res.mean_sum_rate / 1e6:5.2f} Mbit/s  QoS misses {res.violation_rate:.1%}")


print(f"training {episodes} episodes")
trainer.train(callback=report)

greedy = trainer.evaluate(5)
heights = np.mean([[s.uav_xyz[:, 2].mean() for s in r.slots] for r in greedy])
print(f"\ngreedy policy: {np.mean([r.mean_sum_rate for r in greedy]) / 1e6:.2f} Mbit/s, "
      f"mean altitude {heights:.0f} m")

circ = Trainer(baseline_config("circular", env_cfg), TrainerConfig(seed=0))
res = circ.evaluate(5, policy=CircularPolicy())
print(f"circular trajectory: {np.mean([r.mean_sum_rate for r in res]) / 1e6:.2f} Mbit/s at 100 m")
