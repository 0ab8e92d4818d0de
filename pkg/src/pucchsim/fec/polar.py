"""
CRC-aided polar coding for UCI payloads of 12 bits or more.

Construction follows TS 38.212 5.3.1 and 5.4.1 for the uplink control case
without parity-check bits: mother length from the rate-matched length,
frozen set from the reliability sequence, sub-block interleaving, and
circular-buffer bit selection (repetition, puncturing or shortening).

Decoding is batched successive-cancellation list decoding over a leading
batch axis, using min-sum check-node updates and the LLR path metric of
Balatsoukas-Stimming et al. Fully frozen subtrees are processed at node
level without descending to the leaves.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InvalidArgumentError, InsufficientRateError
from .crc import crc_attach, crc_length, parity_matrix

N_MAX_LOG2 = 9          # mother length capped at 512
N_MIN_LOG2 = 5
R_MIN = 1 / 8

# TS 38.212 Table 5.3.1.2-1 restricted to indices below 512, most reliable last.
RELIABILITY = np.array([
      0,   1,   2,   4,   8,  16,  32,   3,   5,  64,   9,   6,  17,  10,  18, 128,
     12,  33,  65,  20, 256,  34,  24,  36,   7, 129,  66,  11,  40,  68, 130,  19,
     13,  48,  14,  72, 257,  21, 132,  35, 258,  26,  80,  37,  25,  22, 136, 260,
    264,  38,  96,  67,  41, 144,  28,  69,  42,  49,  74, 272, 160, 288, 192,  70,
     44, 131,  81,  50,  73,  15, 320, 133,  52,  23, 134, 384,  76, 137,  82,  56,
     27,  97,  39, 259,  84, 138, 145, 261,  29,  43,  98,  88, 140,  30, 146,  71,
    262, 265, 161,  45, 100,  51, 148,  46,  75, 266, 273, 104, 162,  53, 193, 152,
     77, 164, 268, 274,  54,  83,  57, 112, 135,  78, 289, 194,  85, 276,  58, 168,
    139,  99,  86,  60, 280,  89, 290, 196, 141, 101, 147, 176, 142, 321,  31, 200,
     90, 292, 322, 263, 149, 102, 105, 304, 296, 163,  92,  47, 267, 385, 324, 208,
    386, 150, 153, 165, 106,  55, 328, 113, 154,  79, 269, 108, 224, 166, 195, 270,
    275, 291,  59, 169, 114, 277, 156,  87, 197, 116, 170,  61, 281, 278, 177, 293,
    388,  91, 198, 172, 120, 201, 336,  62, 282, 143, 103, 178, 294,  93, 202, 323,
    392, 297, 107, 180, 151, 209, 284,  94, 204, 298, 400, 352, 325, 155, 210, 305,
    300, 109, 184, 115, 167, 225, 326, 306, 157, 329, 110, 117, 212, 171, 330, 226,
    387, 308, 216, 416, 271, 279, 158, 337, 118, 332, 389, 173, 121, 199, 179, 228,
    338, 312, 390, 174, 393, 283, 122, 448, 353, 203,  63, 340, 394, 181, 295, 285,
    232, 124, 205, 182, 286, 299, 354, 211, 401, 185, 396, 344, 240, 206,  95, 327,
    402, 356, 307, 301, 417, 213, 186, 404, 227, 418, 302, 360, 111, 331, 214, 309,
    188, 449, 217, 408, 229, 159, 420, 310, 333, 119, 339, 218, 368, 230, 391, 313,
    450, 334, 233, 175, 123, 341, 220, 314, 424, 395, 355, 287, 183, 234, 125, 342,
    316, 241, 345, 452, 397, 403, 207, 432, 357, 187, 236, 126, 242, 398, 346, 456,
    358, 405, 303, 244, 189, 361, 215, 348, 419, 406, 464, 362, 409, 219, 311, 421,
    410, 231, 248, 369, 190, 364, 335, 480, 315, 221, 370, 422, 425, 451, 235, 412,
    343, 372, 317, 222, 426, 453, 237, 433, 347, 243, 454, 318, 376, 428, 238, 359,
    457, 399, 434, 349, 245, 458, 363, 127, 191, 407, 436, 465, 246, 350, 460, 249,
    411, 365, 440, 374, 423, 466, 250, 371, 481, 413, 366, 468, 429, 252, 373, 482,
    427, 414, 223, 472, 455, 377, 435, 319, 484, 430, 488, 239, 378, 459, 437, 380,
    461, 496, 351, 467, 438, 251, 462, 442, 441, 469, 247, 367, 253, 375, 444, 470,
    483, 415, 485, 473, 474, 254, 379, 431, 489, 486, 476, 439, 490, 463, 381, 497,
    492, 443, 382, 498, 445, 471, 500, 446, 475, 487, 504, 255, 477, 491, 478, 383,
    493, 499, 502, 494, 501, 447, 505, 506, 479, 508, 495, 503, 507, 509, 510, 511,], dtype=np.int64)

# TS 38.212 Table 5.4.1.1-1
SUB_BLOCK_PATTERN = np.array([
    0, 1, 2, 4, 3, 5, 6, 7, 8, 16, 9, 17, 10, 18, 11, 19,
    12, 20, 13, 21, 14, 22, 15, 23, 24, 25, 26, 28, 27, 29, 30, 31,
], dtype=np.int64)

# LLR pinned on shortened (known-zero) positions
_BIG = 1e9


def mother_length(K, E):
    """Mother code length N for K' = K (CRC included) bits rate-matched to E."""
    n1 = int(np.ceil(np.log2(E)))
    if E <= (9 / 8) * 2 ** (n1 - 1) and K / E < 9 / 16:
        n1 -= 1
    n2 = int(np.ceil(np.log2(K / R_MIN)))
    n = max(min(n1, n2, N_MAX_LOG2), N_MIN_LOG2)
    return 2 ** n


def sub_block_interleaver(N):
    """Index map J with ``y[n] = d[J[n]]``."""
    n = np.arange(N)
    blk = N // 32
    return SUB_BLOCK_PATTERN[(32 * n) // N] * blk + n % blk


def rate_match_mode(N, E, K=None):
    """'repetition', 'puncturing' or 'shortening' for the given sizes."""
    if E >= N:
        return "repetition"
    if K is not None and K / E <= 7 / 16:
        return "puncturing"
    return "shortening"


def rate_match(coded, E, K=None):
    """Select E bits from the circular buffer ``coded`` (length N).

    ``E >= N`` repeats the buffer cyclically (``e[k] = coded[k mod N]``).
    For ``E < N`` the first E bits are kept (shortening) unless a payload
    size ``K`` with ``K/E <= 7/16`` is given, in which case the last E bits
    are kept (puncturing). The encoder fills the buffer with the sub-block
    interleaved codeword before calling this.
    """
    coded = np.asarray(coded)
    N = coded.shape[-1]
    E = int(E)
    if N < 1 or E < 1:
        raise InvalidArgumentError("N and E must be positive")
    mode = rate_match_mode(N, E, K)
    if mode == "repetition":
        return coded[..., np.arange(E) % N]
    if mode == "puncturing":
        return coded[..., N - E:]
    return coded[..., :E]


def polar_transform(u):
    """x = u G_N over GF(2), G_N the n-fold Kronecker power of [[1,0],[1,1]]."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    lead = x.shape[:-1]
    step = 1
    while step < N:
        x = x.reshape(lead + (N // (2 * step), 2, step))
        x[..., 0, :] ^= x[..., 1, :]
        x = x.reshape(lead + (N,))
        step *= 2
    return x


@dataclass(frozen=True)
class PolarCode:
    """Frozen-set construction and rate matching for (K', E)."""

    K: int             # bits entering the polar encoder, CRC included
    E: int
    N: int
    info_mask: np.ndarray
    interleaver: np.ndarray
    mode: str

    @property
    def info_positions(self):
        return np.flatnonzero(self.info_mask)


@lru_cache(maxsize=None)
def construct(K, E):
    """Build the code for K' information bits (CRC included) and length E."""
    if E < K:
        raise InsufficientRateError(f"E={E} cannot carry {K} bits")
    N = mother_length(K, E)
    J = sub_block_interleaver(N)
    mode = rate_match_mode(N, E, K)
    excluded = np.zeros(N, dtype=bool)
    if mode == "puncturing":
        excluded[J[:N - E]] = True
        if E >= 3 * N / 4:
            excluded[: int(np.ceil(3 * N / 4 - E / 2))] = True
        else:
            excluded[: int(np.ceil(9 * N / 16 - E / 4))] = True
    elif mode == "shortening":
        excluded[J[E:]] = True
    order = RELIABILITY[RELIABILITY < N]
    order = order[~excluded[order]]
    if order.size < K:
        raise InsufficientRateError(f"only {order.size} usable positions for K'={K}")
    mask = np.zeros(N, dtype=bool)
    mask[order[-K:]] = True
    mask.setflags(write=False)
    J.setflags(write=False)
    return PolarCode(K, E, N, mask, J, mode)


def polar_encode(bits_with_crc, E):
    """Polar-encode CRC-protected bits and rate-match to E bits.

    Information bits fill the non-frozen positions of u in increasing index
    order. Leading batch axes are supported.
    """
    b = np.asarray(bits_with_crc, dtype=np.uint8)
    K = b.shape[-1]
    if K < 12:
        raise InvalidArgumentError("polar path needs at least 12 bits")
    code = construct(K, int(E))
    u = np.zeros(b.shape[:-1] + (code.N,), dtype=np.uint8)
    u[..., code.info_mask] = b
    x = polar_transform(u)
    return rate_match(x[..., code.interleaver], code.E, K)


def uci_polar_encode(payload, E):
    """CRC attachment followed by polar encoding (payload without CRC)."""
    payload = np.asarray(payload, dtype=np.uint8)
    K = payload.shape[-1]
    if E < K + crc_length(K):
        raise InsufficientRateError(f"E={E} < K + CRC = {K + crc_length(K)}")
    return polar_encode(crc_attach(payload), E)


def rate_recover(llrs, code):
    """Map E channel LLRs back onto the N mother-code positions."""
    llrs = np.asarray(llrs, dtype=float)
    N, E = code.N, code.E
    y = np.zeros(llrs.shape[:-1] + (N,))
    if code.mode == "repetition":
        for start in range(0, E, N):
            chunk = llrs[..., start:start + N]
            y[..., :chunk.shape[-1]] += chunk
    elif code.mode == "puncturing":
        y[..., N - E:] = llrs
    else:
        y[..., :E] = llrs
        y[..., E:] = _BIG
    d = np.empty_like(y)
    d[..., code.interleaver] = y
    return d


def _f(a, b):
    return np.copysign(np.minimum(np.abs(a), np.abs(b)), a * b)


class _ListState:
    # the list starts with one path and doubles at each fork up to L
    def __init__(self, batch, L):
        self.L = L
        self.pm = np.zeros((batch, 1))
        self.rows = np.arange(batch)[:, None]
        # per information bit: decided bits and parent path, for trace-back
        self.bits = []
        self.parents = []


def _take(arr, perm, state):
    # gather (B, w_old, ...) along the list axis with perm (B, w_new)
    B, w_old = arr.shape[:2]
    flat = arr.reshape((B * w_old,) + arr.shape[2:])
    out = np.take(flat, (perm + state.rows * w_old).ravel(), axis=0)
    return out.reshape(perm.shape + arr.shape[2:])


def _compose(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    return np.take_along_axis(p1, p2, axis=1)


def _decode_node(alpha, mask, state):
    # returns (partial sums, list permutation applied inside or None)
    size = alpha.shape[-1]
    if not mask.any():
        state.pm += np.sum(np.maximum(-alpha, 0.0), axis=-1)
        return np.zeros(alpha.shape, dtype=np.uint8), None
    if size == 1:
        a = alpha[..., 0]
        cand = np.concatenate(
            [state.pm + np.maximum(-a, 0.0), state.pm + np.maximum(a, 0.0)], axis=1)
        width = a.shape[1]
        order = np.argsort(cand, axis=1, kind="stable")[:, :state.L]
        perm = order % width
        bits = (order // width).astype(np.uint8)
        state.pm = np.take_along_axis(cand, order, axis=1)
        state.bits.append(bits)
        state.parents.append(perm)
        return bits[..., None], perm
    h = size // 2
    a_l, a_r = alpha[..., :h], alpha[..., h:]
    beta_l, p1 = _decode_node(_f(a_l, a_r), mask[:h], state)
    if p1 is not None:
        a_l, a_r = _take(a_l, p1, state), _take(a_r, p1, state)
    beta_r, p2 = _decode_node(a_r + (1.0 - 2.0 * beta_l) * a_l, mask[h:], state)
    if p2 is not None:
        beta_l = _take(beta_l, p2, state)
    return np.concatenate([beta_l ^ beta_r, beta_r], axis=-1), _compose(p1, p2)


def scl_decode(llrs, code, list_size=8):
    """List-decode mother-code LLRs of shape (B, N).

    Returns ``(info bits (B, L, K'), path metrics (B, L))`` sorted by
    ascending metric, most likely path first.
    """
    llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
    L = int(list_size)
    if L < 1 or L & (L - 1):
        raise InvalidArgumentError("list size must be a power of two")
    B = llrs.shape[0]
    state = _ListState(B, L)
    _decode_node(llrs[:, None, :], code.info_mask, state)
    order = np.argsort(state.pm, axis=1, kind="stable")
    pm = np.take_along_axis(state.pm, order, axis=1)
    info = np.empty(order.shape + (code.K,), dtype=np.uint8)
    path = order
    for j in range(code.K - 1, -1, -1):
        info[:, :, j] = np.take_along_axis(state.bits[j], path, axis=1)
        path = np.take_along_axis(state.parents[j], path, axis=1)
    return info, pm


def polar_decode(llrs, K, list_size=8):
    """CRC-aided SCL decoding of E rate-matched LLRs into K payload bits.

    Returns ``(payload, crc_pass)``: the most likely CRC-passing path, or
    the most likely path with ``crc_pass=False`` when none passes. Leading
    batch axes are preserved.
    """
    llrs = np.asarray(llrs, dtype=float)
    E = llrs.shape[-1]
    code = construct(K + crc_length(K), int(E))
    lead = llrs.shape[:-1]
    flat = llrs.reshape(-1, E)
    paths, pm = scl_decode(rate_recover(flat, code), code, list_size)
    P = parity_matrix(K)
    parity = (paths[..., :K].astype(np.int64) @ P) % 2
    ok = np.all(parity == paths[..., K:], axis=-1)
    any_ok = ok.any(axis=1)
    pick = np.where(any_ok, np.argmax(ok, axis=1), 0)
    best = paths[np.arange(flat.shape[0]), pick, :K].reshape(lead + (K,))
    if not lead:
        return best, bool(any_ok[0])
    return best, any_ok.reshape(lead)
