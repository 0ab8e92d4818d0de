"""
PUCCH transmit and receive chains for formats 0 to 4.

The functions here handle one message at a time and wrap the batched
chain classes in :mod:`pucchsim.pucch.chains`, which the Monte Carlo
engine drives directly.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError
from ..phy import Format, PucchConfig, ResourceGrid
from .chains import (Chain, Pf0DmrsChain, Pf0SeqChain, Pf1Chain, Pf2Chain, Pf3Chain,
                     ReceiverOptions, RxOutput, make_chain)
from .estimation import equalize_mrc, estimate_channel_mmse
from .layouts import (Pf1Method, Pf2Overhead, pf1_dmrs_symbols, pf1_layout, pf2_layout,
                      pf3_dmrs_options, pf3_dmrs_symbols, pf3_layout)
from .types import Decision, DetectedState, MessageKind, TxState, UciMessage

__all__ = [
    "UciMessage", "Decision", "MessageKind", "TxState", "DetectedState", "ReceiverOptions",
    "RxOutput", "Chain", "make_chain", "Pf1Method", "Pf2Overhead",
    "pf0_seq_tx", "pf0_seq_detect", "pf0_dmrs_tx", "pf0_dmrs_detect", "pf1_tx", "pf1_detect",
    "pf2_tx", "pf2_decode", "pf3_tx", "pf3_decode", "estimate_channel_mmse", "equalize_mrc",
    "pf1_dmrs_symbols", "pf1_layout", "pf2_layout", "pf3_dmrs_options", "pf3_dmrs_symbols",
    "pf3_layout",
]


def _tx(chain, msg: UciMessage):
    grid = chain.transmit(msg.bits[None])[0]
    if msg.tx_state is TxState.DTX:
        grid = np.zeros_like(grid)
    return ResourceGrid(grid)


def _rx(chain, rx, noise_var, threshold, h_true=None):
    samples = rx.samples if isinstance(rx, ResourceGrid) else np.asarray(rx)
    if samples.ndim == 2:
        samples = samples[None]
    out = chain.receive(samples[None], float(noise_var),
                        None if h_true is None else np.asarray(h_true)[None])
    metric = float(out.metric[0])
    crc = None if out.crc_pass is None else bool(np.asarray(out.crc_pass)[0])
    if crc is not None:
        detected = crc
    else:
        detected = threshold is None or metric > threshold
    state = DetectedState.DETECTED if detected else DetectedState.DTX
    return Decision(state, out.bits[0], metric, crc)


def _harq_check(msg):
    if msg.bits.size > 2:
        raise InvalidArgumentError("PF0/PF1 carry at most 2 bits")


def pf0_seq_tx(msg: UciMessage, cfg: PucchConfig) -> ResourceGrid:
    """Sequence-based PF0: the bit pattern selects a cyclic shift."""
    _harq_check(msg)
    return _tx(Pf0SeqChain(cfg, msg.bits.size), msg)


def pf0_seq_detect(rx, cfg: PucchConfig, noise_var, threshold, n_bits=1) -> Decision:
    """Non-coherent energy detection over the 2 or 4 candidate shifts."""
    return _rx(Pf0SeqChain(cfg, n_bits), rx, noise_var, threshold)


def pf0_dmrs_tx(msg: UciMessage, cfg: PucchConfig) -> ResourceGrid:
    """Two-PRB DMRS-based PF0 structure (1/2 DMRS overhead)."""
    _harq_check(msg)
    return _tx(Pf0DmrsChain(cfg, msg.bits.size), msg)


def pf0_dmrs_detect(rx, cfg, noise_var, threshold, n_bits=1, options=None, h_true=None) -> Decision:
    return _rx(Pf0DmrsChain(cfg, n_bits, options), rx, noise_var, threshold, h_true)


def pf1_tx(msg: UciMessage, cfg: PucchConfig, method=Pf1Method.EXTENSION) -> ResourceGrid:
    _harq_check(msg)
    return _tx(Pf1Chain(cfg, msg.bits.size, method=method), msg)


def pf1_detect(rx, cfg, method, noise_var, threshold, n_bits=1, options=None, h_true=None) -> Decision:
    return _rx(Pf1Chain(cfg, n_bits, options, method=method), rx, noise_var, threshold, h_true)


def pf2_tx(msg: UciMessage, cfg: PucchConfig, overhead=Pf2Overhead.THIRD) -> ResourceGrid:
    if msg.bits.size <= 2:
        raise InvalidArgumentError("PF2 carries more than 2 bits")
    return _tx(Pf2Chain(cfg, msg.bits.size, overhead=overhead), msg)


def pf2_decode(rx, cfg, overhead, noise_var, n_bits, threshold=None, options=None,
               h_true=None) -> Decision:
    """Coherent PF2 receiver; CRC gates K >= 12, ``threshold`` gates K <= 11."""
    return _rx(Pf2Chain(cfg, n_bits, options, overhead=overhead), rx, noise_var, threshold, h_true)


def pf3_tx(msg: UciMessage, cfg: PucchConfig, n_dmrs=None) -> ResourceGrid:
    """PF3 (or PF4 when ``cfg.format`` is PF4) transmitter."""
    if msg.bits.size <= 2:
        raise InvalidArgumentError("PF3/PF4 carry more than 2 bits")
    if cfg.format not in (Format.PF3, Format.PF4):
        raise InvalidArgumentError("configuration is not PF3 or PF4")
    return _tx(Pf3Chain(cfg, msg.bits.size, n_dmrs=n_dmrs), msg)


def pf3_decode(rx, cfg, n_dmrs, noise_var, n_bits, threshold=None, options=None,
               h_true=None) -> Decision:
    return _rx(Pf3Chain(cfg, n_bits, options, n_dmrs=n_dmrs), rx, noise_var, threshold, h_true)
