"""
Batched transmit/receive chains.

Every chain maps a batch of payloads ``bits`` of shape (B, K) to RE grids of
shape (B, n_symbols, n_subcarriers), and maps received grids of shape
(B, n_rx, n_symbols, n_subcarriers) to an :class:`RxOutput`. The DTX
decision is left to the caller: chains report a noise-normalised metric,
and the CRC flag for polar-coded payloads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import sequences
from ..errors import InvalidArgumentError
from ..fec import uci_decode, uci_encode
from ..phy import (SUBCARRIERS_PER_PRB, Format, Modulation, PucchConfig, demodulate_llr,
                   dft_deprecode, dft_precode, map_to_grid, modulate)
from .estimation import estimate_channel_mmse, ls_estimate, smooth_frequency
from .layouts import (Pf1Method, Pf2Overhead, pf0_dmrs_layout, pf0_seq_layout, pf1_dmrs_symbols,
                      pf1_layout, pf2_layout, pf3_dmrs_options, pf3_layout)

# bit pattern (MSB-first integer) -> cyclic-shift offset, gray ordered
PF0_SHIFTS = {1: (0, 6), 2: (0, 3, 9, 6)}
# PF4 DMRS cyclic-shift offset per pre-DFT OCC index
PF4_DMRS_SHIFTS = {2: (0, 6), 4: (0, 6, 3, 9)}

_NV_FLOOR = 1e-12


@dataclass(frozen=True)
class ReceiverOptions:
    """Receiver-side settings shared by all chains.

    estimation : "mmse" (pilot based) or "ideal" (true channel supplied).
    freq_estimation : "mmse" Wiener smoothing or "average" (flat-channel mean).
    time_combining : PF1 only; "interpolate" per-symbol estimates or
        "despread" the DMRS OCC into one static estimate.
    """

    estimation: str = "mmse"
    assumed_delay_spread: float = 300e-9
    freq_estimation: str = "mmse"
    time_combining: str = "interpolate"
    list_size: int = 8
    scs_hz: float = 15e3

    def __post_init__(self):
        if self.estimation not in ("mmse", "ideal"):
            raise InvalidArgumentError(f"unknown estimation {self.estimation!r}")
        if self.freq_estimation not in ("mmse", "average"):
            raise InvalidArgumentError(f"unknown freq_estimation {self.freq_estimation!r}")
        if self.time_combining not in ("interpolate", "despread"):
            raise InvalidArgumentError(f"unknown time_combining {self.time_combining!r}")


@dataclass
class RxOutput:
    bits: np.ndarray                    # (B, K) uint8
    metric: np.ndarray                  # (B,)
    crc_pass: Optional[np.ndarray] = None


def bits_to_index(bits):
    bits = np.asarray(bits, dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ weights


def index_to_bits(index, K):
    index = np.asarray(index, dtype=np.int64)
    return ((index[..., None] >> np.arange(K - 1, -1, -1)) & 1).astype(np.uint8)


def _cover(index, length):
    # DFT cover of any length (puncturing at n = 14 needs 8 UCI symbols)
    if length <= 7:
        return sequences.time_occ(index % length, length).samples
    return sequences._dft_vector(index % length, length)


def shifted_sequence(group, shift):
    return sequences.apply_cyclic_shift(sequences.generate_base_sequence(group), shift % 12)


class Chain:
    """Common plumbing; subclasses define the structure."""

    gate = "threshold"

    def __init__(self, cfg: PucchConfig, n_bits: int, options: ReceiverOptions = None):
        self.cfg = cfg
        self.n_bits = int(n_bits)
        self.opts = options or ReceiverOptions()
        self.n_symbols = cfg.n_symbols
        self.n_subcarriers = cfg.n_subcarriers

    # subclasses fill these in
    layout = None
    dmrs_ref = None

    @property
    def subcarrier_shape(self):
        return (self.n_symbols, self.n_subcarriers)

    def transmit(self, bits) -> np.ndarray:
        raise NotImplementedError

    def receive(self, rx, noise_var, h_true=None) -> RxOutput:
        raise NotImplementedError

    def _check_bits(self, bits):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim == 1:
            bits = bits[None]
        if bits.shape[-1] != self.n_bits:
            raise InvalidArgumentError(f"expected {self.n_bits} bits, got {bits.shape[-1]}")
        return bits

    def _channel(self, rx, noise_var, h_true):
        if self.opts.estimation == "ideal":
            if h_true is None:
                raise InvalidArgumentError("ideal estimation needs the true channel")
            return np.broadcast_to(h_true, rx.shape)
        y = rx[..., self.layout.dmrs[:, 0], self.layout.dmrs[:, 1]]
        return estimate_channel_mmse(y, self.dmrs_ref, self.layout.dmrs, noise_var,
                                     self.opts.assumed_delay_spread, self.n_symbols,
                                     self.n_subcarriers, self.opts.scs_hz,
                                     self.opts.freq_estimation)


class Pf0SeqChain(Chain):
    """Sequence-selection PF0: one cyclic shift per bit pattern."""

    def __init__(self, cfg, n_bits, options=None):
        super().__init__(cfg, n_bits, options)
        if n_bits not in (1, 2):
            raise InvalidArgumentError("PF0 carries 1 or 2 bits")
        self.layout = pf0_seq_layout(self.n_symbols)
        self.candidates = np.stack([shifted_sequence(cfg.group_index, cfg.cyclic_shift + m)
                                    for m in PF0_SHIFTS[n_bits]])

    def transmit(self, bits):
        idx = bits_to_index(self._check_bits(bits))
        return np.repeat(self.candidates[idx][:, None, :], self.n_symbols, axis=1)

    def receive(self, rx, noise_var, h_true=None):
        corr = rx @ self.candidates.conj().T                 # (B, R, S, C)
        energy = np.sum(np.abs(corr) ** 2, axis=(1, 2))      # non-coherent over ant, symbols
        best = np.argmax(energy, axis=-1)
        metric = energy[np.arange(best.size), best] / (max(noise_var, _NV_FLOOR) * SUBCARRIERS_PER_PRB)
        return RxOutput(index_to_bits(best, self.n_bits), metric)


class Pf0DmrsChain(Chain):
    """Two-PRB PF0 study structure with interleaved DMRS and BPSK/QPSK UCI."""

    def __init__(self, cfg, n_bits, options=None):
        super().__init__(cfg, n_bits, options)
        if n_bits not in (1, 2):
            raise InvalidArgumentError("PF0 carries 1 or 2 bits")
        self.n_subcarriers = 2 * SUBCARRIERS_PER_PRB
        self.layout = pf0_dmrs_layout(self.n_symbols)
        self.seq = shifted_sequence(cfg.group_index, cfg.cyclic_shift)
        self.dmrs_ref = np.tile(self.seq, self.n_symbols)
        self.uci_ref = self.dmrs_ref
        self.modulation = Modulation.BPSK if n_bits == 1 else Modulation.QPSK

    def transmit(self, bits):
        d = modulate(self._check_bits(bits), self.modulation)      # (B, 1)
        return map_to_grid(self.layout, d * self.uci_ref, self.dmrs_ref)

    def receive(self, rx, noise_var, h_true=None):
        h = self._channel(rx, noise_var, h_true)
        u = self.layout.uci
        y_u = rx[..., u[:, 0], u[:, 1]]
        h_u = h[..., u[:, 0], u[:, 1]] * self.uci_ref
        z = np.sum(np.conj(h_u) * y_u, axis=(1, 2))
        if self.modulation is Modulation.BPSK:
            bits = (z.real < 0)[:, None]
        else:
            bits = np.stack([z.real < 0, z.imag < 0], axis=-1)
        # DMRS energy, coherent inside each PRB
        d = self.layout.dmrs
        c = rx[..., d[:, 0], d[:, 1]] * np.conj(self.dmrs_ref)
        c = c.reshape(c.shape[:2] + (self.n_symbols * 2, 6)).sum(-1)
        metric = np.sum(np.abs(c) ** 2, axis=(1, 2)) / (max(noise_var, _NV_FLOOR) * 6)
        return RxOutput(bits.astype(np.uint8), metric)


class Pf1Chain(Chain):
    """PF1 with time-domain OCC; extension or puncturing DMRS layout."""

    def __init__(self, cfg, n_bits, options=None, method=None):
        super().__init__(cfg, n_bits, options)
        if n_bits not in (1, 2):
            raise InvalidArgumentError("PF1 carries 1 or 2 bits")
        self.method = Pf1Method(method or cfg.dmrs_layout or Pf1Method.EXTENSION)
        n = self.n_symbols
        self.layout = pf1_layout(n, self.method)
        self.dmrs_symbols = pf1_dmrs_symbols(n, self.method)
        self.uci_symbols = [s for s in range(n) if s not in self.dmrs_symbols]
        self.seq = shifted_sequence(cfg.group_index, cfg.cyclic_shift)
        self.w_dmrs = _cover(cfg.time_occ_index, len(self.dmrs_symbols))
        self.w_uci = _cover(cfg.time_occ_index, len(self.uci_symbols))
        self.dmrs_ref = (self.w_dmrs[:, None] * self.seq).ravel()
        self.uci_ref = (self.w_uci[:, None] * self.seq).ravel()
        self.modulation = Modulation.BPSK if n_bits == 1 else Modulation.QPSK

    def transmit(self, bits):
        d = modulate(self._check_bits(bits), self.modulation)
        return map_to_grid(self.layout, d * self.uci_ref, self.dmrs_ref)

    def _despread_estimate(self, rx, noise_var):
        y = rx[..., self.dmrs_symbols, :]                               # (B, R, M, 12)
        h_ls = ls_estimate(y, self.w_dmrs[:, None] * self.seq).mean(axis=-2)
        k = np.arange(SUBCARRIERS_PER_PRB)
        h = smooth_frequency(h_ls, k, k, noise_var / len(self.dmrs_symbols),
                             self.opts.assumed_delay_spread, self.opts.scs_hz,
                             self.opts.freq_estimation)
        return np.broadcast_to(h[..., None, :], rx.shape)

    def receive(self, rx, noise_var, h_true=None):
        if self.opts.estimation == "mmse" and self.opts.time_combining == "despread":
            h = self._despread_estimate(rx, noise_var)
        else:
            h = self._channel(rx, noise_var, h_true)
        y_u = rx[..., self.uci_symbols, :]
        h_u = h[..., self.uci_symbols, :] * (self.w_uci[:, None] * self.seq)
        z = np.sum(np.conj(h_u) * y_u, axis=(1, 2, 3))
        if self.modulation is Modulation.BPSK:
            bits = (z.real < 0)[:, None]
        else:
            bits = np.stack([z.real < 0, z.imag < 0], axis=-1)
        c = rx[..., self.dmrs_symbols, :] @ np.conj(self.seq)         # (B, R, M)
        c = c * np.conj(self.w_dmrs)
        metric = np.sum(np.abs(c) ** 2, axis=(1, 2)) / (max(noise_var, _NV_FLOOR) * SUBCARRIERS_PER_PRB)
        return RxOutput(bits.astype(np.uint8), metric)


def pf2_dmrs_c_init(slot, symbol, n_id):
    return (2 ** 17 * (14 * slot + symbol + 1) * (2 * n_id + 1) + 2 * n_id) % 2 ** 31


class Pf2Chain(Chain):
    """Coded UCI on FDM'd subcarriers with Gold-sequence QPSK DMRS."""

    def __init__(self, cfg, n_bits, options=None, overhead=None):
        super().__init__(cfg, n_bits, options)
        if n_bits <= 2:
            raise InvalidArgumentError("PF2 carries more than 2 bits")
        self.overhead = Pf2Overhead(overhead or cfg.dmrs_layout or Pf2Overhead.THIRD)
        self.layout = pf2_layout(self.n_symbols, cfg.n_prb, self.overhead)
        self.n_dmrs_per_symbol = len(self.layout.dmrs) // self.n_symbols
        self.n_uci_per_symbol = len(self.layout.uci) // self.n_symbols
        self.E = 2 * self.n_uci_per_symbol
        refs = []
        for s in range(self.n_symbols):
            c = sequences.gold_bits(pf2_dmrs_c_init(cfg.slot, cfg.start_symbol + s, cfg.n_id),
                                    2 * self.n_dmrs_per_symbol)
            refs.append(modulate(c, Modulation.QPSK))
        self.dmrs_ref = np.concatenate(refs)
        self.gate = "crc" if n_bits >= 12 else "threshold"

    def transmit(self, bits):
        coded = uci_encode(self._check_bits(bits), self.E)
        q = modulate(coded, Modulation.QPSK)
        # a second symbol repeats the first
        return map_to_grid(self.layout, np.tile(q, self.n_symbols), self.dmrs_ref)

    def receive(self, rx, noise_var, h_true=None):
        h = self._channel(rx, noise_var, h_true)
        u = self.layout.uci
        y_u = rx[..., u[:, 0], u[:, 1]]
        h_u = h[..., u[:, 0], u[:, 1]]
        z = np.sum(np.conj(h_u) * y_u, axis=1)                       # (B, S*Nu)
        llr = demodulate_llr(z, max(noise_var, _NV_FLOOR), Modulation.QPSK)
        llr = llr.reshape(llr.shape[0], self.n_symbols, self.E).sum(axis=1)
        bits, crc, metric = uci_decode(llr, self.n_bits, self.opts.list_size)
        return RxOutput(np.asarray(bits, np.uint8), np.asarray(metric, float), crc)


class Pf3Chain(Chain):
    """DFT-s-OFDM PF3, and PF4 with pre-DFT block spreading."""

    def __init__(self, cfg, n_bits, options=None, n_dmrs=None):
        super().__init__(cfg, n_bits, options)
        if n_bits <= 2:
            raise InvalidArgumentError(f"{cfg.format.value} carries more than 2 bits")
        n = self.n_symbols
        if n_dmrs is None:
            n_dmrs = cfg.dmrs_layout if cfg.dmrs_layout is not None else pf3_dmrs_options(n)[0]
        self.n_dmrs = int(n_dmrs)
        self.layout = pf3_layout(n, cfg.n_prb, self.n_dmrs)
        self.dmrs_symbols = sorted(set(self.layout.dmrs[:, 0].tolist()))
        self.uci_symbols = sorted(set(self.layout.uci[:, 0].tolist()))
        self.M = cfg.n_subcarriers
        if cfg.format is Format.PF4:
            self.sf, occ_index = cfg.pre_dft_occ
            self.occ = sequences.pre_dft_occ(occ_index, self.sf).samples
            shift = cfg.cyclic_shift + PF4_DMRS_SHIFTS[self.sf][occ_index]
        else:
            self.sf, self.occ, shift = 1, np.ones(1), cfg.cyclic_shift
        self.Md = self.M // self.sf
        self.modulation = cfg.modulation if cfg.modulation is not Modulation.BPSK else Modulation.PI2_BPSK
        self.bps = self.modulation.bits_per_symbol
        self.E = self.bps * self.Md * len(self.uci_symbols)
        seq = np.tile(shifted_sequence(cfg.group_index, shift), cfg.n_prb)
        self.dmrs_ref = np.tile(seq, len(self.dmrs_symbols))
        self.scrambler = sequences.gold_bits(cfg.rnti * 2 ** 15 + cfg.n_id, self.E)
        self.gate = "crc" if n_bits >= 12 else "threshold"

    def transmit(self, bits):
        coded = uci_encode(self._check_bits(bits), self.E) ^ self.scrambler
        d = modulate(coded, self.modulation).reshape(-1, len(self.uci_symbols), self.Md)
        if self.sf > 1:
            d = np.tile(d, self.sf) * np.repeat(self.occ, self.Md)
        x = dft_precode(d, self.M)
        return map_to_grid(self.layout, x.reshape(x.shape[0], -1), self.dmrs_ref)

    def receive(self, rx, noise_var, h_true=None):
        nv = max(noise_var, _NV_FLOOR)
        h = self._channel(rx, noise_var, h_true)
        y_u = rx[..., self.uci_symbols, :]
        h_u = h[..., self.uci_symbols, :]
        g = np.sum(np.abs(h_u) ** 2, axis=1)                          # (B, Nu, M)
        z = np.sum(np.conj(h_u) * y_u, axis=1)
        x = dft_deprecode(z / (g + nv), self.M)
        mu = np.mean(g / (g + nv), axis=-1, keepdims=True)           # MMSE-FDE bias
        if self.sf > 1:
            x = np.mean(x.reshape(x.shape[:-1] + (self.sf, self.Md))
                        * np.conj(self.occ)[:, None], axis=-2)
        var = np.maximum((1.0 - mu) / (mu * self.sf), _NV_FLOOR)
        u = x / mu
        B = u.shape[0]
        var = np.broadcast_to(var, u.shape).reshape(B, -1)
        llr = demodulate_llr(u.reshape(B, -1), var, self.modulation)
        llr = llr * (1.0 - 2.0 * self.scrambler)
        bits, crc, metric = uci_decode(llr, self.n_bits, self.opts.list_size)
        return RxOutput(np.asarray(bits, np.uint8), np.asarray(metric, float), crc)


def make_chain(cfg: PucchConfig, n_bits: int, options: ReceiverOptions = None) -> Chain:
    """Build the chain selected by ``cfg.format`` and ``cfg.dmrs_layout``."""
    fmt = cfg.format
    if fmt is Format.PF0:
        if cfg.dmrs_layout == "dmrs":
            return Pf0DmrsChain(cfg, n_bits, options)
        if cfg.dmrs_layout not in (None, "sequence"):
            raise InvalidArgumentError(f"unknown PF0 structure {cfg.dmrs_layout!r}")
        return Pf0SeqChain(cfg, n_bits, options)
    if fmt is Format.PF1:
        return Pf1Chain(cfg, n_bits, options)
    if fmt is Format.PF2:
        return Pf2Chain(cfg, n_bits, options)
    return Pf3Chain(cfg, n_bits, options)
