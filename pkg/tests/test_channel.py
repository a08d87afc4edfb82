import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavnoma.channel import (
    ChannelParams, channel_gain, distance3d, draw_fading, los_breakpoints, mean_path_loss_db,
    noise_power_dbm, p_los, path_loss_db, sample_channel,
)

# frozen from an independent scalar evaluation with the math module
LOS_100_200 = 85.81748732113923
NLOS_100_200 = 102.8494397918711
PLOS_100_R500 = 0.788198097099468


def test_distance3d():
    assert distance3d([0, 0, 100], [0, 0]) == 100.0
    assert distance3d([0, 0, 100], [30, 40]) == pytest.approx(111.80339887498948, abs=1e-12)
    assert distance3d([10, 10, 50], [-20, 70]) == pytest.approx(math.sqrt(7000.0), abs=1e-12)


def test_path_loss_values():
    los, nlos = path_loss_db(100.0, 200.0, 2.0)
    assert los == pytest.approx(85.82, abs=0.01)
    assert nlos == pytest.approx(102.85, abs=0.01)
    assert los == pytest.approx(LOS_100_200, abs=1e-9)
    assert nlos == pytest.approx(NLOS_100_200, abs=1e-9)


def test_doubling_frequency_adds_6db():
    a = np.array(path_loss_db(80.0, 300.0, 2.0))
    b = np.array(path_loss_db(80.0, 300.0, 4.0))
    np.testing.assert_allclose(b - a, 20 * math.log10(2), atol=1e-12)


@pytest.mark.parametrize("h,d3", [(1.0, 10.0), (0.5, 10.0), (100.0, 99.0)])
def test_path_loss_rejects_bad_geometry(h, d3):
    with pytest.raises(ValueError):
        path_loss_db(h, d3)


def test_los_breakpoints():
    d0, p1 = los_breakpoints(100.0)
    assert d0 == pytest.approx(155.16, abs=0.01)
    assert p1 == pytest.approx(467.01, abs=0.01)
    assert los_breakpoints(20.0)[0] == 18.0


def test_p_los_values():
    assert p_los(100.0, math.hypot(100.0, 100.0)) == 1.0
    val = p_los(100.0, math.hypot(100.0, 500.0))
    assert val == pytest.approx(0.78827, abs=1e-4)
    assert val == pytest.approx(PLOS_100_R500, abs=1e-12)


def test_p_los_rejects_low_altitude():
    with pytest.raises(ValueError):
        p_los(5.0, 50.0)


def test_mean_loss():
    assert mean_path_loss_db(1.0, 85.82, 102.85) == 85.82
    assert mean_path_loss_db(0.0, 85.82, 102.85) == 102.85
    assert mean_path_loss_db(0.78827, 85.82, 102.85) == pytest.approx(89.43, abs=0.05)


def test_channel_gain():
    assert channel_gain(100.0, 1.0) == pytest.approx(1e-10, rel=1e-15)
    assert channel_gain(0.0, 1.0) == 1.0


def test_fading_mean_is_unit():
    rng = np.random.default_rng(3)
    g = channel_gain(95.0, draw_fading(rng, 100_000))
    assert g.mean() == pytest.approx(10 ** -9.5, rel=0.02)
    assert np.all(draw_fading(rng, (3, 4), enabled=False) == 1.0)


def test_noise_default_is_minus_114_dbm():
    assert noise_power_dbm(1e6) == pytest.approx(-114.0, abs=1e-12)
    assert ChannelParams().sigma2 == pytest.approx(10 ** (-14.4), rel=1e-12)


heights = st.floats(10.0, 300.0)


@settings(max_examples=200, deadline=None)
@given(h=heights, r1=st.floats(0.0, 3000.0), r2=st.floats(0.0, 3000.0))
def test_losses_increase_with_distance_and_nlos_dominates(h, r1, r2):
    lo, hi = sorted((r1, r2))
    d_lo, d_hi = math.hypot(h, lo), math.hypot(h, hi)
    los_lo, nlos_lo = path_loss_db(h, d_lo)
    los_hi, nlos_hi = path_loss_db(h, d_hi)
    assert nlos_lo >= los_lo and nlos_hi >= los_hi
    if d_hi > d_lo * (1 + 1e-9):
        assert los_hi > los_lo
        assert nlos_hi >= nlos_lo


@settings(max_examples=200, deadline=None)
@given(h=heights, r=st.floats(0.0, 5000.0))
def test_p_los_is_a_probability(h, r):
    assert 0.0 <= p_los(h, math.hypot(h, r)) <= 1.0


def test_p_los_non_increasing_in_horizontal_distance():
    for h in (10.0, 50.0, 100.0, 150.0, 300.0):
        r = np.linspace(0.0, 4000.0, 4001)
        p = p_los(h, np.hypot(h, r))
        assert np.all(np.diff(p) <= 1e-15)


def test_sample_channel_without_fading_is_deterministic_loss():
    uav = np.array([[0.0, 0.0, 100.0], [150.0, -40.0, 60.0]])
    users = np.array([[10.0, 20.0], [-120.0, 80.0], [300.0, 0.0]])
    s = sample_channel(uav, users, ChannelParams(fading=False))
    assert s.gain_linear.shape == (2, 3)
    np.testing.assert_array_equal(s.gain_linear, 10.0 ** (-s.loss_mean_db / 10.0))
    u, k = 1, 2
    d = distance3d(uav[u], users[k])
    los, nlos = path_loss_db(uav[u, 2], d)
    p = p_los(uav[u, 2], d)
    assert s.loss_mean_db[u, k] == pytest.approx(p * los + (1 - p) * nlos, rel=1e-14)
