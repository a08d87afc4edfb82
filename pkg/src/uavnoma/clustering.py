"""Capacity-bounded K-means over user positions and UAV-cluster matching."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


class InfeasibleClustering(ValueError):
    pass


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    epoch: int = 0

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    @property
    def v(self) -> np.ndarray:
        v = np.zeros((self.n_clusters, self.labels.size), dtype=int)
        v[self.labels, np.arange(self.labels.size)] = 1
        return v

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)


def default_cap(n_users: int, n_clusters: int) -> int:
    return math.ceil(n_users / n_clusters)


def sse(points, labels, centroids) -> float:
    points = np.asarray(points, dtype=float)
    return float(np.sum((points - centroids[labels]) ** 2))


def _sq_dist(points, centroids):
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=-1)


def _farthest_point_seeds(points, k, rng):
    first = int(rng.integers(points.shape[0]))
    seeds = [first]
    closest = ((points - points[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(closest))
        seeds.append(nxt)
        closest = np.minimum(closest, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[seeds].copy()


def _kmeanspp_seeds(points, k, rng):
    idx = [int(rng.integers(points.shape[0]))]
    closest = ((points - points[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            nxt = int(rng.integers(points.shape[0]))
        else:
            nxt = int(rng.choice(points.shape[0], p=closest / total))
        idx.append(nxt)
        closest = np.minimum(closest, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[idx].copy()


def _update_centroids(points, labels, centroids):
    new = centroids.copy()
    for c in range(centroids.shape[0]):
        members = labels == c
        if members.any():
            new[c] = points[members].mean(axis=0)
    return new


def lloyd(points, centroids, max_iter: int = 100, history: list | None = None):
    """Plain Lloyd iterations from the given centroids; returns ``(labels, centroids)``.

    If ``history`` is a list, the objective after each assignment/update pair
    is appended to it.
    """
    labels = None
    for _ in range(max_iter):
        new_labels = np.argmin(_sq_dist(points, centroids), axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = _update_centroids(points, labels, centroids)
        if history is not None:
            history.append(sse(points, labels, centroids))
    return labels, centroids


def rebalance(points, labels, centroids, cap: int):
    """Move overflow points until no cluster holds more than ``cap``.

    From the fullest overfull cluster, the point whose distance to its own
    centroid exceeds its distance to the nearest non-full centroid by the
    most is moved there. Centroids stay fixed during the moves.
    """
    labels = labels.copy()
    k = centroids.shape[0]
    dist = np.sqrt(_sq_dist(points, centroids))
    sizes = np.bincount(labels, minlength=k)
    moves = 0
    while sizes.max() > cap:
        src = int(np.argmax(sizes))
        open_ = np.flatnonzero(sizes < cap)
        members = np.flatnonzero(labels == src)
        alt = dist[np.ix_(members, open_)]
        best_alt = np.argmin(alt, axis=1)
        gap = dist[members, src] - alt[np.arange(members.size), best_alt]
        i = int(np.argmax(gap))
        dst = int(open_[best_alt[i]])
        labels[members[i]] = dst
        sizes[src] -= 1
        sizes[dst] += 1
        moves += 1
    return labels, moves


def capacitated_assignment(points, centroids, cap: int) -> np.ndarray:
    """Minimum total squared distance assignment with at most ``cap`` points per cluster."""
    k = centroids.shape[0]
    cost = np.repeat(_sq_dist(points, centroids), cap, axis=1)
    rows, cols = linear_sum_assignment(cost)
    labels = np.empty(points.shape[0], dtype=int)
    labels[rows] = cols // cap
    return labels


def refine_capped(points, labels, centroids, cap: int, max_iter: int = 100, history=None):
    """Alternate capacitated assignment and centroid updates until the labels settle."""
    for _ in range(max_iter):
        new = capacitated_assignment(points, centroids, cap)
        cost_new = sse(points, new, centroids)
        if np.array_equal(new, labels) or cost_new >= sse(points, labels, centroids) - 1e-12:
            break
        labels = new
        centroids = _update_centroids(points, labels, centroids)
        if history is not None:
            history.append(sse(points, labels, centroids))
    return labels, centroids


def _labels_sse(points, labels, k):
    total = 0.0
    for c in range(k):
        members = points[labels == c]
        if len(members):
            total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def swap_search(points, labels, k: int, cap: int, max_passes: int = 50):
    """First-improvement moves and pairwise swaps that keep every cluster within ``cap``."""
    labels = labels.copy()
    cost = _labels_sse(points, labels, k)
    n = points.shape[0]
    for _ in range(max_passes):
        improved = False
        sizes = np.bincount(labels, minlength=k)
        for i in range(n):
            for c in range(k):
                if c == labels[i] or sizes[c] >= cap:
                    continue
                trial = labels.copy()
                trial[i] = c
                new = _labels_sse(points, trial, k)
                if new < cost - 1e-9:
                    sizes[labels[i]] -= 1
                    sizes[c] += 1
                    labels, cost, improved = trial, new, True
        for i in range(n):
            for j in range(i + 1, n):
                if labels[i] == labels[j]:
                    continue
                trial = labels.copy()
                trial[i], trial[j] = labels[j], labels[i]
                new = _labels_sse(points, trial, k)
                if new < cost - 1e-9:
                    labels, cost, improved = trial, new, True
        if not improved:
            break
    return labels


def kmeans_capped(points, n_clusters: int, cap: int | None = None, rng=None,
                  max_iter: int = 100, n_init: int = 4, refine: bool = True,
                  epoch: int = 0) -> ClusterAssignment:
    """K-means with an upper bound on cluster size.

    The first attempt runs Lloyd's algorithm from farthest-point seeds, then
    moves overflow points to the nearest cluster with room and recomputes
    the centroids. With ``refine`` that result is polished by capacitated
    Lloyd iterations (optimal assignment under the cap, then centroid
    update) and a move/swap local search, neither of which increases the
    objective, and ``n_init - 1`` further
    capacitated runs from k-means++ seeds compete with it; the lowest
    objective wins. Deterministic for a given ``rng`` state.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if n_clusters < 1:
        raise ValueError("need at least one cluster")
    if cap is None:
        cap = default_cap(n, n_clusters)
    if n_clusters * cap < n:
        raise InfeasibleClustering(
            f"{n} users cannot fit in {n_clusters} clusters of capacity {cap}")
    if rng is None:
        rng = np.random.default_rng(0)
    best = None
    for attempt in range(n_init):
        if attempt == 0:
            centroids = _farthest_point_seeds(points, n_clusters, rng)
            labels, centroids = lloyd(points, centroids, max_iter)
            labels, moves = rebalance(points, labels, centroids, cap)
            if moves:
                centroids = _update_centroids(points, labels, centroids)
        elif refine:
            centroids = _kmeanspp_seeds(points, n_clusters, rng)
            labels = capacitated_assignment(points, centroids, cap)
            centroids = _update_centroids(points, labels, centroids)
        else:
            break
        if refine:
            labels, centroids = refine_capped(points, labels, centroids, cap, max_iter)
            labels = swap_search(points, labels, n_clusters, cap)
            centroids = _update_centroids(points, labels, centroids)
        cost = sse(points, labels, centroids)
        if best is None or cost < best[0] - 1e-9:
            best = (cost, labels, centroids)
    return ClusterAssignment(best[1], best[2], epoch)


def recluster_schedule(t: int, period: int) -> bool:
    if period <= 0:
        raise ValueError("re-cluster period must be positive")
    return t % period == 0


def match_clusters(uav_xy, centroids) -> np.ndarray:
    """Greedy minimum-distance matching; returns ``uav_of_cluster[c]``.

    The closest remaining (UAV, centroid) pair is fixed first, so UAVs keep
    serving the users nearest to them across re-clusterings.
    """
    uav_xy = np.asarray(uav_xy, dtype=float)[:, :2]
    d = np.sqrt(_sq_dist(np.asarray(centroids, dtype=float), uav_xy))  # (C, U)
    n_c, n_u = d.shape
    owner = np.full(n_c, -1)
    taken = np.zeros(n_u, dtype=bool)
    for flat in np.argsort(d, axis=None, kind="stable"):
        c, u = divmod(int(flat), n_u)
        if owner[c] < 0 and not taken[u]:
            owner[c] = u
            taken[u] = True
    return owner
