"""Air-to-ground propagation: LoS/NLoS path loss, LoS probability, faded gain.

Carrier frequency enters in GHz. The mean loss mixes the LoS and NLoS losses
in dB with the LoS probability as weight, and the linear gain multiplies that
mean loss by a unit-mean exponential (Rayleigh-envelope) fading power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_ALTITUDE = 10.0
THERMAL_NOISE_DBM_HZ = -174.0


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def noise_power_dbm(bandwidth_hz: float, psd_dbm_hz: float = THERMAL_NOISE_DBM_HZ) -> float:
    return psd_dbm_hz + 10.0 * np.log10(bandwidth_hz)


@dataclass(frozen=True)
class ChannelParams:
    fc_ghz: float = 2.0
    noise_dbm: float = -114.0
    fading: bool = True

    def __post_init__(self):
        if self.fc_ghz <= 0:
            raise ValueError("carrier frequency must be positive")

    @property
    def sigma2(self) -> float:
        return float(dbm_to_watts(self.noise_dbm))


@dataclass
class ChannelSample:
    """Per-link quantities for one slot; every field is shaped ``(U, K)``."""

    d3: np.ndarray
    p_los: np.ndarray
    loss_los_db: np.ndarray
    loss_nlos_db: np.ndarray
    loss_mean_db: np.ndarray
    gain_linear: np.ndarray


def distance3d(uav_xyz, user_xy):
    """3D link length; broadcasts ``(..., 3)`` UAV against ``(..., 2)`` user positions."""
    uav_xyz = np.asarray(uav_xyz, dtype=float)
    user_xy = np.asarray(user_xy, dtype=float)
    dx = uav_xyz[..., 0] - user_xy[..., 0]
    dy = uav_xyz[..., 1] - user_xy[..., 1]
    return np.sqrt(uav_xyz[..., 2] ** 2 + dx**2 + dy**2)


def _check_geometry(h, d3):
    if np.any(h <= 1.0):
        raise ValueError("altitude must exceed 1 m for the path-loss model")
    # sqrt round-off may put d3 a few ulps below h for a user right underneath
    if np.any(d3 < h * (1.0 - 1e-12)):
        raise ValueError("3D distance shorter than altitude: invalid geometry")


def path_loss_db(h, d3, fc_ghz: float = 2.0):
    """LoS and NLoS path loss in dB. NLoS is floored at the LoS value."""
    h = np.asarray(h, dtype=float)
    d3 = np.asarray(d3, dtype=float)
    _check_geometry(h, d3)
    log_h = np.log10(h)
    log_d = np.log10(d3)
    freq = 20.0 * np.log10(fc_ghz)
    los = 30.9 + (22.25 - 0.5 * log_h) * log_d + freq
    nlos = np.maximum(los, 32.4 + (43.2 - 7.6 * log_h) * log_d + freq)
    return los, nlos


def los_breakpoints(h):
    """Return ``(d0, p1)``: the always-LoS radius and the decay length, both in metres."""
    log_h = np.log10(np.asarray(h, dtype=float))
    d0 = np.maximum(294.05 * log_h - 432.94, 18.0)
    p1 = 233.98 * log_h - 0.95
    return d0, p1


def p_los(h, d3):
    h = np.asarray(h, dtype=float)
    d3 = np.asarray(d3, dtype=float)
    if np.any(h < MIN_ALTITUDE):
        raise ValueError(f"LoS model not valid below {MIN_ALTITUDE} m altitude")
    _check_geometry(h, d3)
    d0, p1 = los_breakpoints(h)
    if np.any(p1 <= 0):
        raise ValueError("non-positive LoS decay length")
    r = np.sqrt(np.maximum(d3**2 - h**2, 0.0))
    with np.errstate(divide="ignore"):
        far = d0 / r + np.exp(-r / p1 + d0 / p1)
    return np.where(r <= d0, 1.0, np.clip(far, 0.0, 1.0))


def mean_path_loss_db(p, loss_los_db, loss_nlos_db):
    p = np.asarray(p, dtype=float)
    return p * loss_los_db + (1.0 - p) * loss_nlos_db


def channel_gain(loss_mean_db, fading_draw=1.0):
    return np.asarray(fading_draw, dtype=float) * 10.0 ** (-np.asarray(loss_mean_db, dtype=float) / 10.0)


def draw_fading(rng, shape, enabled: bool = True) -> np.ndarray:
    if not enabled:
        return np.ones(shape)
    return rng.exponential(1.0, size=shape)


def sample_channel(uav_xyz, user_xy, params: ChannelParams, rng=None) -> ChannelSample:
    """Compute every UAV-user link for one slot.

    ``uav_xyz`` is ``(U, 3)``, ``user_xy`` is ``(K, 2)``. Fading is redrawn
    from ``rng`` when enabled in ``params``.
    """
    uav_xyz = np.asarray(uav_xyz, dtype=float)
    user_xy = np.asarray(user_xy, dtype=float)
    d3 = distance3d(uav_xyz[:, None, :], user_xy[None, :, :])
    h = np.broadcast_to(uav_xyz[:, 2:3], d3.shape)
    los, nlos = path_loss_db(h, d3, params.fc_ghz)
    p = p_los(h, d3)
    mean = mean_path_loss_db(p, los, nlos)
    fade = draw_fading(rng, d3.shape, params.fading)
    return ChannelSample(d3, p, los, nlos, mean, channel_gain(mean, fade))
