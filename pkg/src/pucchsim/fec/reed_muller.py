"""
(32, K) Reed-Muller block code for 3 to 11 UCI bits.

The generator rows are the basis sequences M_{i,n} of TS 38.212
Table 5.3.3.3-1. Decoding is exhaustive maximum likelihood over the 2^K
codewords using the LLR correlation metric.
"""
from functools import lru_cache

import numpy as np

from ..errors import InvalidArgumentError

# M_{i,n}: row i = 0..31, column n = 0..10
BASIS = np.array([
    [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1],
    [1, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1],
    [1, 0, 0, 1, 0, 0, 1, 0, 1, 1, 1],
    [1, 0, 1, 1, 0, 0, 0, 0, 1, 0, 1],
    [1, 1, 1, 1, 0, 0, 0, 1, 0, 0, 1],
    [1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1],
    [1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 1],
    [1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 1],
    [1, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1],
    [1, 0, 1, 1, 1, 0, 1, 0, 0, 1, 1],
    [1, 0, 1, 0, 0, 1, 1, 1, 0, 1, 1],
    [1, 1, 1, 0, 0, 1, 1, 0, 1, 0, 1],
    [1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1],
    [1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 1],
    [1, 0, 0, 0, 1, 1, 0, 1, 0, 0, 1],
    [1, 1, 0, 0, 1, 1, 1, 1, 0, 1, 1],
    [1, 1, 1, 0, 1, 1, 1, 0, 0, 1, 0],
    [1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 0],
    [1, 1, 0, 1, 1, 1, 1, 1, 0, 0, 0],
    [1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1],
    [1, 1, 0, 1, 0, 0, 0, 0, 0, 1, 1],
    [1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 1],
    [1, 1, 1, 0, 1, 0, 0, 0, 1, 1, 1],
    [1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0],
    [1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 1],
    [1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0],
    [1, 1, 1, 1, 0, 1, 0, 1, 1, 1, 0],
    [1, 0, 1, 0, 1, 1, 1, 0, 1, 0, 0],
    [1, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
], dtype=np.uint8)


def _check_k(K):
    if not 3 <= K <= 11:
        raise InvalidArgumentError(f"Reed-Muller path needs 3 <= K <= 11, got {K}")


def generator_matrix(K):
    """K x 32 generator matrix; row i is basis column i."""
    _check_k(K)
    return BASIS[:, :K].T.copy()


@lru_cache(maxsize=None)
def _codebook(K):
    # row c holds the codeword of the payload whose MSB-first integer value is c
    idx = np.arange(2 ** K)
    payloads = ((idx[:, None] >> np.arange(K - 1, -1, -1)) & 1).astype(np.uint8)
    words = (payloads.astype(np.int64) @ generator_matrix(K)) % 2
    bipolar = 1.0 - 2.0 * words
    payloads.setflags(write=False)
    bipolar.setflags(write=False)
    return payloads, bipolar


def rm32_encode(bits, K=None):
    """Encode K payload bits into 32 coded bits; leading batch axes allowed."""
    bits = np.asarray(bits, dtype=np.uint8)
    K = bits.shape[-1] if K is None else K
    _check_k(K)
    if bits.shape[-1] != K:
        raise InvalidArgumentError(f"payload length {bits.shape[-1]} != K={K}")
    return ((bits.astype(np.int64) @ generator_matrix(K)) % 2).astype(np.uint8)


def rm32_ml(llrs, K):
    """Exhaustive ML search.

    Returns ``(payload bits, best correlation)``. Positive LLR favours bit 0.
    Ties go to the lowest payload index (MSB-first integer value).
    """
    _check_k(K)
    llrs = np.asarray(llrs, dtype=float)
    payloads, bipolar = _codebook(K)
    corr = llrs @ bipolar.T
    best = np.argmax(corr, axis=-1)
    return payloads[best], np.take_along_axis(corr, best[..., None], axis=-1)[..., 0]


def rm32_decode(llrs, K):
    """ML-decode 32 LLRs into K payload bits."""
    return rm32_ml(llrs, K)[0]
