"""Capacity-bounded K-means: balanced user clusters, one per UAV.

Compares the clustering against a brute-force optimum on small
instances, then shows how the UAVs are matched to the clusters.

Run: python3 demos/02_clustering.py
"""

import itertools

import numpy as np

from uavnoma.clustering import kmeans_capped, match_clusters, sse

rng = np.random.default_rng(7)


def brute_force(points, k, cap):
    best = np.inf
    for labels in itertools.product(range(k), repeat=len(points)):
        labels = np.array(labels)
        if np.bincount(labels, minlength=k).max() > cap:
            continue
        cost = sum(((points[labels == c] - points[labels == c].mean(0)) ** 2).sum()
                   for c in range(k) if np.any(labels == c))
        best = min(best, cost)
    return best


print("instance   K-means SSE   optimum SSE   ratio")
for i in range(6):
    pts = rng.uniform(-200, 200, (7, 2))
    a = kmeans_capped(pts, 3, 3, rng)
    cost, opt = sse(pts, a.labels, a.centroids), brute_force(pts, 3, 3)
    print(f"   {i}       {cost:10.1f}   {opt:10.1f}    {cost / opt:.3f}")

users = rng.uniform(-200, 200, (6, 2))
a = kmeans_capped(users, 3, 2, rng)
uavs = np.array([[-200.0, -200.0], [200.0, 0.0], [0.0, 200.0]])
owner = match_clusters(uavs, a.centroids)
print("\nsix users, three UAVs, at most two users each")
for c in range(3):
    members = np.flatnonzero(a.labels == c)
    print(f"  cluster {c}: users {members.tolist()}, centroid {np.round(a.centroids[c], 1)}, "
          f"served by UAV {owner[c]} at {uavs[owner[c]]}")
