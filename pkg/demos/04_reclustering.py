"""Why users are re-clustered: walkers drift away from their UAV.

Users walk in fixed directions. Each UAV hovers at 60 m above the
centroid of its own cluster. With periodic re-clustering the clusters
follow the crowd; without it, the per-slot rate decays as users spread.

Run: python3 demos/04_reclustering.py
"""

from dataclasses import replace

import numpy as np

from uavnoma.env import Env, EnvConfig
from uavnoma.mobility import MOVE_VECTORS, MoveAction


def follow(env, world, h=60.0):
    cfg = env.config
    step = cfg.uav_speed * cfg.dt
    moves = []
    for u in range(cfg.uav_count):
        members = world.cluster(u)
        target = np.r_[world.user_xy[members].mean(0), h] if members.size else world.uav_xyz[u]
        dist = [np.linalg.norm(world.uav_xyz[u] + MOVE_VECTORS[m] * step - target) for m in MoveAction]
        moves.append(int(np.argmin(dist)))
    return np.array(moves), np.full((cfg.uav_count, cfg.cap), 0.25 * cfg.power_budget)


base = EnvConfig(mobility="directional", slots=200, recluster_period=50)
curves = {}
for name, cfg in (("re-clustered", base), ("fixed clusters", replace(base, recluster=False))):
    env = Env(cfg)
    rates = []
    for ep in range(8):
        world = env.reset(3, ep)
        row = []
        while not env.done(world):
            row.append(env.step(world, *follow(env, world))[1].sum_rate)
        rates.append(row)
    curves[name] = np.mean(rates, axis=0) / 1e6

print("slot window   re-clustered   fixed clusters   (Mbit/s, mean of 8 episodes)")
for start in range(0, 201, 25):
    window = slice(start, start + 25)
    print(f"  {start:3d}-{min(start + 24, 200):3d}     {curves['re-clustered'][window].mean():8.2f}"
          f"       {curves['fixed clusters'][window].mean():8.2f}")
