"""
Pilot-based channel estimation and receive combining.

Frequency direction: LS at the pilots followed by a Wiener filter built from
a uniform power-delay profile on [0, sqrt(12)*sigma], whose RMS spread is
the assumed ``sigma``. Time direction: linear interpolation between pilot
symbols and nearest-neighbour extrapolation outside them.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg

from ..errors import InvalidArgumentError

DEFAULT_SCS = 15e3
_MIN_REG = 1e-12


def _freq_correlation(df, tau_max):
    # E[H(f) H*(f + df)] for a uniform delay profile on [0, tau_max]
    x = np.asarray(df) * tau_max
    return np.exp(-1j * np.pi * x) * np.sinc(x)


@lru_cache(maxsize=512)
def _wiener_cached(pilots, targets, tau_max, reg, scs):
    p = np.asarray(pilots, dtype=float) * scs
    t = np.asarray(targets, dtype=float) * scs
    r_pp = _freq_correlation(p[None, :] - p[:, None], tau_max)
    r_tp = _freq_correlation(p[None, :] - t[:, None], tau_max)
    a = r_pp + reg * np.eye(p.size)
    # W = R_tp (R_pp + reg I)^-1, via a Hermitian solve on the transpose
    w = scipy.linalg.solve(a.conj().T, r_tp.conj().T, assume_a="her").conj().T
    w.setflags(write=False)
    return w


def wiener_matrix(pilot_subcarriers, target_subcarriers, noise_var, delay_spread, scs_hz=DEFAULT_SCS):
    """Matrix W with ``h_target = W @ h_ls_pilots``."""
    tau_max = np.sqrt(12.0) * max(float(delay_spread), 0.0)
    reg = max(float(noise_var), _MIN_REG)
    return _wiener_cached(tuple(int(v) for v in pilot_subcarriers),
                          tuple(int(v) for v in target_subcarriers),
                          round(tau_max, 15), round(reg, 15), float(scs_hz))


@lru_cache(maxsize=256)
def time_interpolation_matrix(pilot_symbols, n_symbols):
    """(n_symbols x n_pilot_symbols) linear weights, nearest outside the span."""
    ps = np.asarray(pilot_symbols, dtype=float)
    if np.any(np.diff(ps) <= 0):
        raise InvalidArgumentError("pilot symbols must be strictly ascending")
    s = np.arange(n_symbols)
    # column j is the linear "hat" function of pilot j; np.interp clamps at the ends
    m = np.stack([np.interp(s, ps, np.eye(ps.size)[j]) for j in range(ps.size)], axis=1)
    m.setflags(write=False)
    return m


def ls_estimate(rx_pilots, ref):
    """Least-squares estimate ``y * conj(ref) / |ref|^2``."""
    ref = np.asarray(ref)
    return np.asarray(rx_pilots) * np.conj(ref) / np.abs(ref) ** 2


def smooth_frequency(h_ls, pilot_subcarriers, target_subcarriers, noise_var, delay_spread,
                     scs_hz=DEFAULT_SCS, mode="mmse"):
    """Map LS estimates on the last axis from pilot to target subcarriers."""
    if mode == "average":
        mean = np.mean(h_ls, axis=-1, keepdims=True)
        return np.broadcast_to(mean, h_ls.shape[:-1] + (len(target_subcarriers),))
    if mode != "mmse":
        raise InvalidArgumentError(f"unknown frequency estimation mode {mode!r}")
    w = wiener_matrix(pilot_subcarriers, target_subcarriers, noise_var, delay_spread, scs_hz)
    return h_ls @ w.T


def estimate_channel_mmse(dmrs_rx, dmrs_ref, positions, noise_var, assumed_delay_spread,
                          n_symbols=None, n_subcarriers=None, scs_hz=DEFAULT_SCS, mode="mmse"):
    """Channel estimate on every RE of the allocation.

    Parameters
    ----------
    dmrs_rx : array (..., P)
        Received DMRS values; leading axes (batch, antenna) are kept.
    dmrs_ref : array (P,)
        Transmitted DMRS values.
    positions : array (P, 2)
        (symbol, subcarrier) of each DMRS RE. Pilot symbols must share one
        subcarrier pattern.
    noise_var : float
    assumed_delay_spread : float
        RMS delay spread in seconds behind the Wiener filter.

    Returns
    -------
    array (..., n_symbols, n_subcarriers)
    """
    positions = np.asarray(positions, dtype=int).reshape(-1, 2)
    if positions.shape[0] == 0:
        raise InvalidArgumentError("at least one pilot is required")
    dmrs_rx = np.asarray(dmrs_rx)
    n_symbols = int(positions[:, 0].max() + 1) if n_symbols is None else n_symbols
    n_subcarriers = int(positions[:, 1].max() + 1) if n_subcarriers is None else n_subcarriers
    symbols = np.unique(positions[:, 0])
    first = positions[positions[:, 0] == symbols[0], 1]
    per_symbol = []
    h_ls = ls_estimate(dmrs_rx, dmrs_ref)
    targets = np.arange(n_subcarriers)
    for s in symbols:
        sel = positions[:, 0] == s
        if not np.array_equal(positions[sel, 1], first):
            raise InvalidArgumentError("pilot symbols must share one subcarrier pattern")
        per_symbol.append(smooth_frequency(h_ls[..., sel], first, targets, noise_var,
                                           assumed_delay_spread, scs_hz, mode))
    h_sym = np.stack(per_symbol, axis=-2)          # (..., n_pilot_symbols, sc)
    t = time_interpolation_matrix(tuple(int(s) for s in symbols), n_symbols)
    return np.einsum("st,...tk->...sk", t, h_sym)


def equalize_mrc(rx, h_est, noise_var=None, reg=1e-12, antenna_axis=-2):
    """Maximal-ratio combining across receive antennas.

    ``rx`` and ``h_est`` share a shape with antennas on ``antenna_axis``.
    Returns ``(out, gain)`` where ``out = sum conj(h) rx / (sum |h|^2 + reg)``
    and ``gain = sum |h|^2`` is the per-RE post-combining SNR weight
    (divide by ``noise_var`` for the SNR itself).
    """
    rx = np.asarray(rx)
    h_est = np.asarray(h_est)
    if rx.shape != h_est.shape:
        raise InvalidArgumentError(f"rx {rx.shape} and channel {h_est.shape} shapes differ")
    num = np.sum(np.conj(h_est) * rx, axis=antenna_axis)
    gain = np.sum(np.abs(h_est) ** 2, axis=antenna_axis)
    return num / (gain + reg), gain
