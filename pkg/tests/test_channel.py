import numpy as np
import pytest

from pucchsim.channel import (TDL_C_TABLE, ChannelRealization, TdlProfile, add_awgn,
                              apply_channel, doppler_hz, draw_fading_params, fading_response,
                              flat_profile, realize_channel, symbol_duration, tdl_c_profile)
from pucchsim.errors import InvalidArgumentError
from pucchsim.phy import ResourceGrid

SCS = 15e3


def batch_response(profile, velocity, n, times, freqs, seed=0, carrier=4e9):
    # the batch rides on the antenna axis: n independent single-antenna draws
    rng = np.random.default_rng(seed)
    a, p = draw_fading_params(rng, n, profile.tap_delays.size)
    return fading_response(profile, a, p, doppler_hz(velocity, carrier), times, freqs)


def test_profile_scaling():
    max_norm = max(d for d, _ in TDL_C_TABLE)
    p100 = tdl_c_profile(100e-9)
    assert np.isclose(p100.tap_delays.max(), 100e-9 * max_norm)
    for s in (100e-9, 300e-9, 1000e-9):
        assert abs(tdl_c_profile(s).tap_powers.sum() - 1) < 1e-9
    p200 = tdl_c_profile(200e-9)
    assert np.allclose(p200.tap_delays, 2 * p100.tap_delays)
    assert np.allclose(p200.tap_powers, p100.tap_powers)
    assert np.all(np.diff(p100.tap_delays) >= 0)
    assert np.isclose(p100.rms_delay_spread, 100e-9, rtol=1e-3)


@pytest.mark.parametrize("spread", [0.0, -1e-9])
def test_profile_rejects_bad_spread(spread):
    with pytest.raises(InvalidArgumentError):
        tdl_c_profile(spread)


def test_profile_validation():
    with pytest.raises(InvalidArgumentError):
        TdlProfile(np.array([0.0, 1e-7]), np.array([0.5, 0.6]))
    with pytest.raises(InvalidArgumentError):
        TdlProfile(np.array([1e-7, 0.0]), np.array([0.5, 0.5]))


def test_doppler_at_120_kmh():
    fd = doppler_hz(120, 4e9)
    assert abs(fd - 120 / 3.6 * 4e9 / 299_792_458.0) < 1e-9
    assert 444 < fd < 445


def test_zero_velocity_is_static():
    rng = np.random.default_rng(1)
    freqs = np.arange(12) * SCS
    h = realize_channel(tdl_c_profile(300e-9), 0.0, 4e9, SCS, 14, freqs, 2, rng)
    assert h.response.shape == (2, 14, 12)
    assert np.allclose(h.response, h.response[:, :1], atol=1e-9)


def test_single_tap_is_flat():
    rng = np.random.default_rng(2)
    h = realize_channel(flat_profile(), 120.0, 4e9, SCS, 4, np.arange(48) * SCS, 2, rng)
    assert np.allclose(h.response, h.response[..., :1], atol=1e-12)


def test_unit_average_power():
    times = np.arange(2) * symbol_duration(SCS)
    h = batch_response(tdl_c_profile(300e-9), 30.0, 10000, times, np.arange(12) * SCS)
    p = np.abs(h) ** 2
    sample = p[:, 0, 0]
    assert abs(sample.mean() - 1) < 3 * sample.std() / np.sqrt(sample.size)


def test_coherence_shrinks_with_delay_spread():
    freqs = np.arange(24) * SCS
    corr = {}
    for spread in (100e-9, 1000e-9):
        h = batch_response(tdl_c_profile(spread), 3.0, 10000, [0.0], freqs, seed=3)[:, 0]
        corr[spread] = abs(np.mean(h[:, 0] * np.conj(h[:, 12]))) / np.mean(np.abs(h[:, 0]) ** 2)
    assert corr[1000e-9] < corr[100e-9]


def test_time_correlation_drops_with_velocity():
    T = symbol_duration(SCS)
    times = np.array([0.0, 14 * T])
    corr = {}
    for v in (3.0, 500.0):
        h = batch_response(tdl_c_profile(300e-9), v, 10000, times, [0.0], seed=4)[..., 0]
        corr[v] = abs(np.mean(h[:, 0] * np.conj(h[:, 1]))) / np.mean(np.abs(h[:, 0]) ** 2)
    assert corr[500.0] < corr[3.0]
    assert corr[3.0] > 0.95


def test_antennas_uncorrelated():
    rng = np.random.default_rng(5)
    a, p = draw_fading_params(rng, 2 * 10000, 24)
    a, p = a.reshape(10000, 2, 24, -1), p.reshape(10000, 2, 24, -1)
    h = fading_response(tdl_c_profile(300e-9), a, p, 100.0, [0.0], [0.0])[..., 0, 0]
    rho = abs(np.mean(h[:, 0] * np.conj(h[:, 1]))) / np.sqrt(
        np.mean(np.abs(h[:, 0]) ** 2) * np.mean(np.abs(h[:, 1]) ** 2))
    assert rho < 0.05


def test_apply_channel():
    rng = np.random.default_rng(6)
    tx = ResourceGrid(rng.standard_normal((4, 12)) + 1j * rng.standard_normal((4, 12)))
    ones = ChannelRealization(np.ones((2, 4, 12), complex))
    assert np.allclose(apply_channel(tx, ones).samples, tx.samples[0])
    h = ChannelRealization(rng.standard_normal((2, 4, 12)) + 0j)
    rx = apply_channel(tx, h).samples
    assert np.allclose(np.abs(rx), np.abs(h.response) * np.abs(tx.samples[0]))
    assert not apply_channel(ResourceGrid.zeros(4, 12), h).samples.any()
    with pytest.raises(InvalidArgumentError):
        apply_channel(ResourceGrid.zeros(5, 12), h)


def test_awgn_statistics():
    rng = np.random.default_rng(7)
    grid = ResourceGrid.zeros(100, 1200)
    assert np.array_equal(add_awgn(grid, 0.0, rng).samples, grid.samples)
    nv = 0.3
    w = add_awgn(grid, nv, rng).samples.ravel()
    assert abs(np.mean(np.abs(w) ** 2) / nv - 1) < 0.02
    assert abs(np.var(w.real) / (nv / 2) - 1) < 0.02
    assert abs(np.var(w.imag) / (nv / 2) - 1) < 0.02
    with pytest.raises(InvalidArgumentError):
        add_awgn(grid, -1.0, rng)


def test_realize_channel_argument_checks():
    with pytest.raises(InvalidArgumentError):
        realize_channel(flat_profile(), -1.0, 4e9, SCS, 1, [0.0], 2, np.random.default_rng())
