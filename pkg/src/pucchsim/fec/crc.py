"""CRC attachment for the polar-coded UCI path (TS 38.212, 5.1)."""
from functools import lru_cache

import numpy as np

from ..errors import InvalidArgumentError

# generator polynomials, coefficient list from D^L down to D^0
CRC6 = (1, 1, 0, 0, 0, 0, 1)                    # D^6 + D^5 + 1
CRC11 = (1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1)    # D^11 + D^10 + D^9 + D^5 + 1


def crc_length(K):
    """Number of CRC bits carried by a K-bit payload (0 for K <= 11)."""
    if K >= 20:
        return 11
    if K >= 12:
        return 6
    return 0


def _poly(K):
    return CRC11 if K >= 20 else CRC6


def _remainder(bits, poly):
    L = len(poly) - 1
    reg = np.concatenate([np.asarray(bits, dtype=np.uint8), np.zeros(L, np.uint8)])
    g = np.asarray(poly, dtype=np.uint8)
    for i in range(len(bits)):
        if reg[i]:
            reg[i:i + L + 1] ^= g
    return reg[-L:]


@lru_cache(maxsize=None)
def parity_matrix(K):
    """K x L GF(2) matrix P with ``crc(bits) = bits @ P mod 2``."""
    L = crc_length(K)
    P = np.zeros((K, L), dtype=np.uint8)
    for i in range(K):
        e = np.zeros(K, np.uint8)
        e[i] = 1
        P[i] = _remainder(e, _poly(K))
    P.setflags(write=False)
    return P


def crc_attach(bits, K=None):
    """Append the CRC-6 (12 <= K <= 19) or CRC-11 (K >= 20) parity bits.

    ``bits`` may carry leading batch dimensions; the payload is the last axis.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if K is None:
        K = bits.shape[-1]
    if bits.shape[-1] != K:
        raise InvalidArgumentError(f"payload length {bits.shape[-1]} != K={K}")
    if K < 12:
        raise InvalidArgumentError("CRC is only attached for K >= 12")
    parity = (bits.astype(np.int64) @ parity_matrix(K)) % 2
    return np.concatenate([bits, parity.astype(np.uint8)], axis=-1)


def crc_check(word, K):
    """True where the last axis of ``word`` has a zero CRC remainder."""
    word = np.asarray(word, dtype=np.uint8)
    L = crc_length(K)
    if K < 12 or word.shape[-1] != K + L:
        raise InvalidArgumentError(
            f"word length {word.shape[-1]} does not match K={K} plus CRC")
    parity = (word[..., :K].astype(np.int64) @ parity_matrix(K)) % 2
    ok = np.all(parity == word[..., K:], axis=-1)
    return bool(ok) if ok.ndim == 0 else ok
