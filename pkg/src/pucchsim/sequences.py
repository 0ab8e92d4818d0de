"""
Deterministic sequence material for the uplink control channel.

Length-12 low-PAPR base sequences and their cyclic shifts, DFT orthogonal
cover codes (time domain and pre-DFT block spreading), and the length-31
Gold scrambling generator.

The base sequences are r(n) = exp(j*phi(n)*pi/4) with the phase integers of
3GPP TS 38.211 Table 5.2.2.2-2 (M_ZC = 12), which are identical to the
LTE table in TS 36.211 Table 5.5.1.2-1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

SEQUENCE_LENGTH = 12
NUM_GROUPS = 30

# TS 38.211 Table 5.2.2.2-2, phi(0..11) for u = 0..29.
_PHASE_TABLE_12 = (
    (-3, 1, -3, -3, -3, 3, -3, -1, 1, 1, 1, -3),
    (-3, 3, 1, -3, 1, 3, -1, -1, 1, 3, 3, 3),
    (-3, 3, 3, 1, -3, 3, -1, 1, 3, -3, 3, -3),
    (-3, -3, -1, 3, 3, 3, -3, 3, -3, 1, -1, -3),
    (-3, -1, -1, 1, 3, 1, 1, -1, 1, -1, -3, 1),
    (-3, -3, 3, 1, -3, -3, -3, -1, 3, -1, 1, 3),
    (1, -1, 3, -1, -1, -1, -3, -1, 1, 1, 1, -3),
    (-1, -3, 3, -1, -3, -3, -3, -1, 1, -1, 1, -3),
    (-3, -1, 3, 1, -3, -1, -3, 3, 1, 3, 3, 1),
    (-3, -1, -1, -3, -3, -1, -3, 3, 1, 3, -1, -3),
    (-3, 3, -3, 3, 3, -3, -1, -1, 3, 3, 1, -3),
    (-3, -1, -3, -1, -1, -3, 3, 3, -1, -1, 1, -3),
    (-3, -1, 3, -3, -3, -1, -3, 1, -1, -3, 3, 3),
    (-3, 1, -1, -1, 3, 3, -3, -1, -1, -3, -1, -3),
    (1, 3, -3, 1, 3, 3, 3, 1, -1, 1, -1, 3),
    (-3, 1, 3, -1, -1, -3, -3, -1, -1, 3, 1, -3),
    (-1, -1, -1, -1, 1, -3, -1, 3, 3, -1, -3, 1),
    (-1, 1, 1, -1, 1, 3, 3, -1, -1, -3, 1, -3),
    (-3, 1, 3, 3, -1, -1, -3, 3, 3, -3, 3, -3),
    (-3, -3, 3, -3, -1, 3, 3, 3, -1, -3, 1, -3),
    (3, 1, 3, 1, 3, -3, -1, 1, 3, 1, -1, -3),
    (-3, 3, 1, 3, -3, 1, 1, 1, 1, 3, -3, 3),
    (-3, 3, 3, 3, -1, -3, -3, -1, -3, 1, 3, -3),
    (3, -1, -3, 3, -3, -1, 3, 3, 3, -3, -1, -3),
    (-3, -1, 1, -3, 1, 3, 3, 3, -1, -3, 3, 3),
    (-3, 3, 1, -1, 3, 3, -3, 1, -1, 1, -1, 1),
    (-1, 1, 3, -3, 1, -1, 1, -1, -1, -3, 1, -1),
    (-3, -3, 3, 3, 3, -3, -1, 1, -3, 3, 1, -3),
    (1, -1, 3, 1, 1, -1, -1, -1, 1, 3, -3, 1),
    (-3, 3, -3, 3, -3, -3, 3, -1, -1, 1, 3, -3),
)


@dataclass(frozen=True)
class BaseSequence:
    """Unit-modulus length-12 low-PAPR sequence of one group."""

    group_index: int
    samples: np.ndarray

    def __post_init__(self):
        if self.samples.shape != (SEQUENCE_LENGTH,):
            raise InvalidArgumentError("base sequence must have 12 samples")
        if not np.allclose(np.abs(self.samples), 1.0, atol=1e-12, rtol=0):
            raise InvalidArgumentError("base sequence samples must be unit modulus")
        self.samples.setflags(write=False)


@dataclass(frozen=True)
class OccVector:
    """One orthogonal cover code of a given length."""

    index: int
    length: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples.setflags(write=False)


def load_phase_table(path):
    """Read a 30 x 12 phase-integer table from a JSON file.

    The file holds an array of 30 arrays of 12 integers from {-3, -1, 1, 3}.
    """
    table = json.loads(Path(path).read_text())
    arr = np.asarray(table)
    if arr.shape != (NUM_GROUPS, SEQUENCE_LENGTH):
        raise InvalidArgumentError(
            f"phase table must be {NUM_GROUPS}x{SEQUENCE_LENGTH}, got {arr.shape}")
    if not np.all(np.isin(arr, (-3, -1, 1, 3))):
        raise InvalidArgumentError("phase entries must be odd integers in [-3, 3]")
    return tuple(tuple(int(v) for v in row) for row in arr)


_phase_table = _PHASE_TABLE_12


def set_phase_table(table=None):
    """Replace the active phase table; ``None`` restores the embedded one."""
    global _phase_table
    _phase_table = _PHASE_TABLE_12 if table is None else tuple(map(tuple, table))
    _base_samples.cache_clear()


@lru_cache(maxsize=None)
def _base_samples(group_index):
    phi = np.asarray(_phase_table[group_index], dtype=float)
    return np.exp(1j * phi * np.pi / 4)


def generate_base_sequence(group_index: int) -> BaseSequence:
    """Return the length-12 base sequence r_u(n) of group ``group_index``."""
    if not 0 <= int(group_index) < NUM_GROUPS:
        raise InvalidArgumentError(f"group_index must be in [0, 29], got {group_index}")
    return BaseSequence(int(group_index), _base_samples(int(group_index)).copy())


def apply_cyclic_shift(seq, alpha: int) -> np.ndarray:
    """Cyclic shift in frequency: ``seq(n) * exp(j*2*pi*alpha*n/12)``.

    ``seq`` may be a :class:`BaseSequence` or a raw length-12 array.
    """
    if not 0 <= int(alpha) < SEQUENCE_LENGTH:
        raise InvalidArgumentError(f"cyclic shift must be in [0, 11], got {alpha}")
    samples = seq.samples if isinstance(seq, BaseSequence) else np.asarray(seq)
    n = np.arange(SEQUENCE_LENGTH)
    return samples * np.exp(2j * np.pi * int(alpha) * n / SEQUENCE_LENGTH)


def _dft_vector(index, length):
    m = np.arange(length)
    w = np.exp(-2j * np.pi * index * m / length)
    # exact +-1 / +-j where the exponent allows it
    w.real[np.abs(w.real) < 1e-15] = 0.0
    w.imag[np.abs(w.imag) < 1e-15] = 0.0
    return w


def time_occ(index: int, length: int) -> OccVector:
    """Time-domain DFT cover code ``w(m) = exp(-j*2*pi*index*m/length)``."""
    if not 1 <= int(length) <= 7:
        raise InvalidArgumentError(f"time OCC length must be in [1, 7], got {length}")
    if not 0 <= int(index) < int(length):
        raise InvalidArgumentError(f"OCC index {index} invalid for length {length}")
    return OccVector(int(index), int(length), _dft_vector(int(index), int(length)))


def pre_dft_occ(index: int, length: int) -> OccVector:
    """Block-spreading code applied before DFT precoding (spreading factor 2 or 4)."""
    if int(length) not in (2, 4):
        raise InvalidArgumentError(f"pre-DFT OCC length must be 2 or 4, got {length}")
    if not 0 <= int(index) < int(length):
        raise InvalidArgumentError(f"OCC index {index} invalid for length {length}")
    return OccVector(int(index), int(length), _dft_vector(int(index), int(length)))


_NC = 1600


def gold_bits(c_init: int, count: int) -> np.ndarray:
    """Length-31 Gold sequence c(n), n = 0..count-1, for seed ``c_init``.

    x1 is initialised to 1, 0, ..., 0; x2 holds the 31 bits of ``c_init``
    (LSB first). The output is ``x1(n+Nc) xor x2(n+Nc)`` with Nc = 1600.
    """
    count = int(count)
    if count < 0:
        raise InvalidArgumentError("count must be non-negative")
    if count == 0:
        return np.zeros(0, dtype=np.uint8)
    c_init = int(c_init) & 0x7FFFFFFF
    total = count + _NC
    x1 = np.zeros(total + 31, dtype=np.uint8)
    x2 = np.zeros(total + 31, dtype=np.uint8)
    x1[0] = 1
    x2[:31] = (c_init >> np.arange(31)) & 1
    # x(n+31) needs x(n+3): blocks of 28 never read their own output.
    for start in range(0, total, 28):
        stop = min(start + 28, total)
        n = np.arange(start, stop)
        x1[n + 31] = x1[n + 3] ^ x1[n]
        x2[n + 31] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n]
    return (x1[_NC:_NC + count] ^ x2[_NC:_NC + count]).astype(np.uint8)
