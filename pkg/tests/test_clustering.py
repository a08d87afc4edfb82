import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavnoma.clustering import (
    InfeasibleClustering, default_cap, kmeans_capped, lloyd, match_clusters, recluster_schedule, sse,
)


def exhaustive_optimum(points, n_clusters, cap):
    """Lowest SSE over every capacity-feasible labelling (no centroid search involved)."""
    best = np.inf
    for labels in itertools.product(range(n_clusters), repeat=len(points)):
        labels = np.array(labels)
        if np.bincount(labels, minlength=n_clusters).max() > cap:
            continue
        cost = 0.0
        for c in range(n_clusters):
            members = points[labels == c]
            if len(members):
                cost += ((members - members.mean(axis=0)) ** 2).sum()
        best = min(best, cost)
    return best


def random_instance(rng):
    n = int(rng.integers(4, 9))
    k = int(rng.integers(2, 4))
    cap = default_cap(n, k) + int(rng.integers(0, 2))
    return rng.uniform(-200, 200, (n, 2)), k, cap


def test_square_corners_split_into_side_pairs():
    pts = np.array([[0, 0], [0, 10], [20, 0], [20, 10]], dtype=float)
    a = kmeans_capped(pts, 2, 2, np.random.default_rng(0))
    assert a.sizes().tolist() == [2, 2]
    assert a.labels[0] == a.labels[1] and a.labels[2] == a.labels[3]


def test_coincident_points_fill_lowest_cluster():
    pts = np.zeros((5, 2))
    a = kmeans_capped(pts, 2, 10, np.random.default_rng(0))
    assert a.labels.tolist() == [0] * 5
    assert a.sizes().tolist() == [5, 0]


def test_adversarial_seven_points_respect_capacity():
    # a tight blob of five plus two outliers forces the blob to be split
    pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5], [100, 0], [0, 100]], dtype=float)
    a = kmeans_capped(pts, 3, 3, np.random.default_rng(1))
    assert a.sizes().max() <= 3
    assert np.array_equal(a.v.sum(axis=0), np.ones(7, dtype=int))
    assert sse(pts, a.labels, a.centroids) <= 1.1 * exhaustive_optimum(pts, 3, 3)


def test_infeasible_capacity_is_reported():
    with pytest.raises(InfeasibleClustering):
        kmeans_capped(np.zeros((7, 2)), 3, 2)


def test_within_ten_percent_of_exhaustive_optimum():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        pts, k, cap = random_instance(rng)
        a = kmeans_capped(pts, k, cap, rng)
        assert a.sizes().max() <= cap
        assert sse(pts, a.labels, a.centroids) <= 1.1 * exhaustive_optimum(pts, k, cap) + 1e-9


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40), k=st.integers(1, 5), slack=st.integers(0, 3))
def test_assignment_invariants(seed, n, k, slack):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-200, 200, (n, 2))
    cap = default_cap(n, k) + slack
    a = kmeans_capped(pts, k, cap, rng)
    assert np.array_equal(a.v.sum(axis=0), np.ones(n, dtype=int))
    assert a.sizes().max() <= cap


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_lloyd_objective_never_increases(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-200, 200, (30, 2))
    history = []
    lloyd(pts, pts[rng.choice(30, 4, replace=False)].copy(), history=history)
    assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))


def test_deterministic_given_seed():
    pts = np.random.default_rng(3).uniform(-200, 200, (12, 2))
    a = kmeans_capped(pts, 3, 4, np.random.default_rng(11))
    b = kmeans_capped(pts, 3, 4, np.random.default_rng(11))
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.centroids, b.centroids)


@pytest.mark.parametrize("t,expected", [(0, True), (49, False), (100, True)])
def test_recluster_schedule(t, expected):
    assert recluster_schedule(t, 50) is expected


def test_match_clusters_prefers_nearest_pairs():
    uavs = np.array([[0.0, 0.0, 100.0], [100.0, 0.0, 100.0], [0.0, 100.0, 100.0]])
    centroids = np.array([[95.0, 5.0], [5.0, 90.0], [1.0, 1.0]])
    assert match_clusters(uavs, centroids).tolist() == [1, 2, 0]
