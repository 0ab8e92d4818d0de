"""
TDL-C Rayleigh fading with sum-of-sinusoids Doppler, and AWGN.

The response is evaluated directly in frequency on the allocated
subcarriers at the start time of each OFDM symbol:

    H(a, s, k) = sum_l g_{a,l}(t_s) * exp(-j 2 pi f_k tau_l)

with ``g`` a Jakes-type process built from equal-power rays with random
arrival angles and phases.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .phy import ResourceGrid

SPEED_OF_LIGHT = 299_792_458.0
RAYS_PER_TAP = 16

# TDL-C, 3GPP TR 38.901 Table 7.7.2-3: normalised delay, power in dB.
TDL_C_TABLE = (
    (0.0000, -4.4), (0.2099, -1.2), (0.2219, -3.5), (0.2329, -5.2),
    (0.2176, -2.5), (0.6366, 0.0), (0.6448, -2.2), (0.6560, -3.9),
    (0.6584, -7.4), (0.7935, -7.1), (0.8213, -10.7), (0.9336, -11.1),
    (1.2285, -5.1), (1.3083, -6.8), (2.1704, -8.7), (2.7105, -13.2),
    (4.2589, -13.9), (4.6003, -13.9), (5.4902, -15.8), (5.6077, -17.1),
    (6.3065, -16.0), (6.6374, -15.7), (7.0427, -21.6), (8.6523, -22.8),
)


@dataclass(frozen=True)
class TdlProfile:
    """Tap delays in seconds (ascending) and linear powers summing to one."""

    tap_delays: np.ndarray
    tap_powers: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.tap_delays, dtype=float)
        p = np.asarray(self.tap_powers, dtype=float)
        if d.shape != p.shape or d.ndim != 1 or d.size == 0:
            raise InvalidArgumentError("delays and powers must be equal-length vectors")
        if np.any(d < 0) or np.any(np.diff(d) < 0):
            raise InvalidArgumentError("tap delays must be non-negative and ascending")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidArgumentError("tap powers must be non-negative and sum to 1")
        object.__setattr__(self, "tap_delays", d)
        object.__setattr__(self, "tap_powers", p)

    @property
    def rms_delay_spread(self):
        mean = np.sum(self.tap_powers * self.tap_delays)
        return float(np.sqrt(np.sum(self.tap_powers * (self.tap_delays - mean) ** 2)))


def tdl_c_profile(rms_delay_spread: float) -> TdlProfile:
    """TDL-C taps scaled to ``rms_delay_spread`` seconds, sorted by delay."""
    if not rms_delay_spread > 0:
        raise InvalidArgumentError("delay spread must be positive")
    table = np.array(sorted(TDL_C_TABLE))
    powers = 10.0 ** (table[:, 1] / 10.0)
    return TdlProfile(table[:, 0] * rms_delay_spread, powers / powers.sum())


def flat_profile() -> TdlProfile:
    return TdlProfile(np.zeros(1), np.ones(1))


def doppler_hz(velocity_kmh, carrier_hz):
    return velocity_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT


def symbol_duration(scs_hz):
    # normal CP: 2048 + 144 samples at 2048 * scs
    return (2048 + 144) / (2048 * scs_hz)


@dataclass
class ChannelRealization:
    """Frequency response of shape (n_rx, n_symbols, n_subcarriers)."""

    response: np.ndarray
    doppler_hz: float = 0.0

    @property
    def n_rx(self):
        return self.response.shape[-3]


def draw_fading_params(rng, n_rx, n_taps, rays=RAYS_PER_TAP):
    """Random arrival angles and phases, shape (n_rx, n_taps, rays) each."""
    u = rng.random((2, n_rx, n_taps, rays))
    return 2 * np.pi * u[0], 2 * np.pi * u[1]


def fading_response(profile: TdlProfile, angles, phases, fd, symbol_times, subcarrier_freqs):
    """Batched response from drawn ray parameters.

    ``angles`` and ``phases`` have shape (..., n_rx, n_taps, rays); the
    result has shape (..., n_rx, n_symbols, n_subcarriers).
    """
    angles = np.asarray(angles)
    n_rays = angles.shape[-1]
    t = np.asarray(symbol_times, dtype=float)
    w = 2 * np.pi * fd * np.cos(angles)            # rad/s per ray
    amp = np.sqrt(profile.tap_powers / n_rays)[:, None]
    if t.size > 1 and np.allclose(np.diff(t), t[1] - t[0]):
        # g(t0 + s*T): start phasor times a power of the per-symbol step
        cur = amp * np.exp(1j * (phases + w * t[0]))
        step = np.exp(1j * w * (t[1] - t[0]))
        g = np.empty(angles.shape[:-1] + (t.size,), dtype=complex)   # (..., rx, tap, sym)
        for s in range(t.size):
            g[..., s] = cur.sum(axis=-1)
            cur = cur * step
    else:
        g = np.sum(amp[..., None] * np.exp(1j * (phases[..., None] + w[..., None] * t)), axis=-2)
    f = np.asarray(subcarrier_freqs, dtype=float)
    steer = np.exp(-2j * np.pi * profile.tap_delays[:, None] * f[None, :])   # (tap, sc)
    return np.swapaxes(g, -1, -2) @ steer


def realize_channel(profile: TdlProfile, velocity_kmh, carrier_hz, scs_hz, n_symbols,
                    subcarrier_freqs, n_rx, rng, start_symbol=0) -> ChannelRealization:
    """Draw one TDL realization evaluated on the given symbols and subcarriers."""
    if velocity_kmh < 0 or carrier_hz <= 0 or scs_hz <= 0 or n_symbols < 1 or n_rx < 1:
        raise InvalidArgumentError("channel parameters must be positive")
    fd = doppler_hz(velocity_kmh, carrier_hz)
    angles, phases = draw_fading_params(rng, n_rx, profile.tap_delays.size)
    times = (start_symbol + np.arange(n_symbols)) * symbol_duration(scs_hz)
    h = fading_response(profile, angles, phases, fd, times, subcarrier_freqs)
    return ChannelRealization(h, fd)


def apply_channel(tx: ResourceGrid, h: ChannelRealization) -> ResourceGrid:
    """Per-RE multiplication; a single-port grid is broadcast to every rx antenna."""
    samples = tx.samples if isinstance(tx, ResourceGrid) else np.asarray(tx)
    if samples.ndim == 3:
        if samples.shape[0] != 1:
            raise InvalidArgumentError("only single-port transmission is supported")
        samples = samples[0]
    if samples.shape != h.response.shape[-2:]:
        raise InvalidArgumentError(
            f"grid {samples.shape} does not match channel {h.response.shape[-2:]}")
    return ResourceGrid(h.response * samples)


def add_awgn(grid, noise_var, rng):
    """Add CN(0, noise_var) to every RE of a grid or array."""
    if noise_var < 0:
        raise InvalidArgumentError("noise variance must be non-negative")
    samples = grid.samples if isinstance(grid, ResourceGrid) else np.asarray(grid, dtype=complex)
    if noise_var == 0:
        out = samples.copy()
    else:
        w = rng.standard_normal(samples.shape + (2,))
        out = samples + np.sqrt(noise_var / 2) * (w[..., 0] + 1j * w[..., 1])
    return ResourceGrid(out) if isinstance(grid, ResourceGrid) else out
