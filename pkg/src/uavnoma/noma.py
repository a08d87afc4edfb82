"""Downlink NOMA rate model with SIC, plus the time-division OMA reference.

Conventions used throughout:

* ``gains`` is the ``(U, K)`` linear power-gain matrix, ``gains[s, k]`` from
  UAV ``s`` to user ``k``.
* ``serving`` is a length-``K`` integer array, ``serving[k]`` the UAV that
  serves user ``k`` (each user has exactly one server).
* ``powers`` is a length-``K`` array of per-user transmit powers in watts.

Interference is received *power*, ``sum_{s != u} g[s, k] * P^s``, where
``P^s`` is the total transmit power of UAV ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PowerAllocation:
    p: np.ndarray
    budget: float

    def feasible(self, serving, n_uavs: int, tol: float = 1e-12) -> bool:
        if np.any(np.asarray(self.p) < 0):
            return False
        totals = uav_total_power(self.p, serving, n_uavs)
        return bool(np.all(totals <= self.budget * (1 + tol)))


@dataclass
class RateReport:
    per_user_rate: np.ndarray
    sinr: np.ndarray
    sum_rate: float
    equivalent_gain: np.ndarray = field(default=None)
    orders: list = field(default_factory=list)

    def cluster_sum(self, serving, n_uavs: int) -> np.ndarray:
        return np.bincount(serving, weights=self.per_user_rate, minlength=n_uavs)


def serving_matrix(serving, n_uavs: int) -> np.ndarray:
    """0/1 serving indicators, shape ``(U, K)``."""
    serving = np.asarray(serving, dtype=int)
    v = np.zeros((n_uavs, serving.size), dtype=int)
    v[serving, np.arange(serving.size)] = 1
    return v


def uav_total_power(powers, serving, n_uavs: int) -> np.ndarray:
    return np.bincount(np.asarray(serving, dtype=int), weights=np.asarray(powers, dtype=float), minlength=n_uavs)


def interference_matrix(gains, tx_power) -> np.ndarray:
    """``I[u, k] = sum_{s != u} gains[s, k] * tx_power[s]``.

    Summed with the own-UAV term zeroed (not subtracted) so the result is
    free of cancellation error.
    """
    gains = np.asarray(gains, dtype=float)
    received = gains * np.asarray(tx_power, dtype=float)[:, None]
    n = gains.shape[0]
    others = ~np.eye(n, dtype=bool)
    return np.where(others[:, :, None], received[None, :, :], 0.0).sum(axis=1)


def inter_cluster_interference(k: int, u: int, gains, tx_power) -> float:
    return float(interference_matrix(gains, tx_power)[u, k])


def equivalent_gain(own_gain, interference, sigma2: float):
    return np.asarray(own_gain, dtype=float) / (np.asarray(interference, dtype=float) + sigma2)


def decoding_order(users, gains_equiv) -> np.ndarray:
    """Users sorted ascending by equivalent gain; ties go to the lower user id."""
    users = np.asarray(users, dtype=int)
    gains_equiv = np.asarray(gains_equiv, dtype=float)
    return users[np.lexsort((users, gains_equiv))]


def sic_sinr(own_gain, power, interference, sigma2: float) -> np.ndarray:
    """SINR of each user in a cluster already arranged in decoding order.

    User at position ``k`` has cancelled everyone before it; the signals of
    users after it reach it through its own channel as interference.
    """
    own_gain = np.asarray(own_gain, dtype=float)
    power = np.asarray(power, dtype=float)
    later = np.concatenate([np.cumsum(power[::-1])[::-1][1:], [0.0]])
    intra = own_gain * later
    return own_gain * power / (intra + np.asarray(interference, dtype=float) + sigma2)


def intra_cluster_interference(own_gain, power) -> np.ndarray:
    own_gain = np.asarray(own_gain, dtype=float)
    power = np.asarray(power, dtype=float)
    later = np.concatenate([np.cumsum(power[::-1])[::-1][1:], [0.0]])
    return own_gain * later


def shannon_rate(sinr, bandwidth: float):
    return bandwidth * np.log2(1.0 + np.asarray(sinr, dtype=float))


def throughput(sum_rates) -> float:
    """Total over slots ``t = 0..T`` with each slot counted once."""
    return float(np.sum(sum_rates))


def order_is_sic_valid(order, gains_equiv) -> bool:
    g = np.asarray(gains_equiv, dtype=float)[np.asarray(order, dtype=int)]
    return bool(np.all(np.diff(g) >= 0))


def noma_rates(gains, serving, powers, sigma2: float, bandwidth: float, orders=None) -> RateReport:
    """Per-user NOMA rates for one slot.

    ``orders`` optionally fixes the decoding order of each cluster (a list
    indexed by UAV); by default each cluster is sorted by equivalent gain.
    """
    gains = np.asarray(gains, dtype=float)
    serving = np.asarray(serving, dtype=int)
    powers = np.asarray(powers, dtype=float)
    n_uavs, n_users = gains.shape
    users = np.arange(n_users)
    inter = interference_matrix(gains, uav_total_power(powers, serving, n_uavs))[serving, users]
    own = gains[serving, users]
    g_eq = equivalent_gain(own, inter, sigma2)
    sinr = np.zeros(n_users)
    used_orders = []
    for u in range(n_uavs):
        members = users[serving == u]
        if orders is None:
            order = decoding_order(members, g_eq[members])
        else:
            order = np.asarray(orders[u], dtype=int)
            if sorted(order.tolist()) != members.tolist():
                raise ValueError(f"decoding order for UAV {u} does not match its cluster")
        used_orders.append(order)
        if order.size:
            sinr[order] = sic_sinr(own[order], powers[order], inter[order], sigma2)
    rate = shannon_rate(sinr, bandwidth)
    return RateReport(rate, sinr, float(rate.sum()), g_eq, used_orders)


def oma_rates(gains, serving, budget: float, sigma2: float, bandwidth: float) -> RateReport:
    """Time-division OMA: each of the ``K^u`` users gets full power for ``1/K^u`` of the slot."""
    gains = np.asarray(gains, dtype=float)
    serving = np.asarray(serving, dtype=int)
    n_uavs, n_users = gains.shape
    users = np.arange(n_users)
    sizes = np.bincount(serving, minlength=n_uavs)
    tx = np.where(sizes > 0, budget, 0.0)
    inter = interference_matrix(gains, tx)[serving, users]
    own = gains[serving, users]
    sinr = own * budget / (inter + sigma2)
    rate = shannon_rate(sinr, bandwidth) / sizes[serving]
    g_eq = equivalent_gain(own, inter, sigma2)
    orders = [users[serving == u] for u in range(n_uavs)]
    return RateReport(rate, sinr, float(rate.sum()), g_eq, orders)
