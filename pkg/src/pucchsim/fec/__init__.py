"""UCI channel coding: Reed-Muller (32, K) for 3..11 bits, CRC-aided polar above."""
import numpy as np

from ..errors import InvalidArgumentError
from .crc import crc_attach, crc_check, crc_length
from .polar import polar_decode, polar_encode, rate_match, uci_polar_encode
from .reed_muller import rm32_decode, rm32_encode, rm32_ml

__all__ = [
    "crc_attach", "crc_check", "crc_length", "polar_encode", "polar_decode",
    "rate_match", "rm32_encode", "rm32_decode", "UciCodeword", "uci_encode",
    "uci_decode", "code_kind",
]


def code_kind(K):
    if 3 <= K <= 11:
        return "small_block"
    if K >= 12:
        return "polar"
    raise InvalidArgumentError("payloads of 1-2 bits are not block coded")


class UciCodeword:
    """Payload bits with their rate-matched codeword."""

    def __init__(self, payload_bits, coded_bits):
        self.payload_bits = np.asarray(payload_bits, dtype=np.uint8)
        self.coded_bits = np.asarray(coded_bits, dtype=np.uint8)
        self.code_kind = code_kind(self.payload_bits.shape[-1])

    @property
    def E(self):
        return self.coded_bits.shape[-1]


def uci_encode(payload, E):
    """Encode K > 2 payload bits to E coded bits (batch axes allowed)."""
    payload = np.asarray(payload, dtype=np.uint8)
    if code_kind(payload.shape[-1]) == "small_block":
        c = rm32_encode(payload)
        return c[..., np.arange(E) % 32]
    return uci_polar_encode(payload, E)


def uci_decode(llrs, K, list_size=8):
    """Decode E LLRs; returns ``(payload, crc_pass, metric)``.

    For the small-block code ``crc_pass`` is None and ``metric`` is the ML
    correlation normalised by the LLR vector norm. For the polar path the
    metric is NaN.
    """
    llrs = np.asarray(llrs, dtype=float)
    E = llrs.shape[-1]
    if code_kind(K) == "small_block":
        acc = np.zeros(llrs.shape[:-1] + (32,))
        for start in range(0, E, 32):
            chunk = llrs[..., start:start + 32]
            acc[..., :chunk.shape[-1]] += chunk
        bits, corr = rm32_ml(acc, K)
        norm = np.sqrt(np.sum(acc ** 2, axis=-1))
        metric = np.divide(corr, norm, out=np.zeros_like(corr), where=norm > 0)
        return bits, None, metric
    bits, ok = polar_decode(llrs, K, list_size)
    return bits, ok, np.full(np.shape(ok), np.nan)
