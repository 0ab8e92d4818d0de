"""RE layouts of every supported PUCCH structure."""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from ..errors import InvalidArgumentError
from ..phy import SUBCARRIERS_PER_PRB, Layout


class Pf1Method(str, Enum):
    EXTENSION = "extension"
    PUNCTURING = "puncturing"


class Pf2Overhead(str, Enum):
    HALF = "half"
    THIRD = "third"
    QUARTER = "quarter"


# DMRS subcarrier indices inside one PRB
PF2_DMRS_PATTERNS = {
    Pf2Overhead.HALF: (0, 2, 4, 6, 8, 10),
    Pf2Overhead.THIRD: (1, 4, 7, 10),
    Pf2Overhead.QUARTER: (1, 5, 9),
}


def pf1_dmrs_symbols(n, method):
    """DMRS symbol indices of a length-n PF1 transmission."""
    method = Pf1Method(method)
    if not 4 <= n <= 14:
        raise InvalidArgumentError(f"PF1 length must be in [4, 14], got {n}")
    if method is Pf1Method.EXTENSION:
        return list(range(0, n, 2))
    # ceil(n/2) - 1 contiguous symbols; the block always contains floor(n/2)
    m = math.ceil(n / 2) - 1
    start = math.ceil((n - m) / 2)
    return list(range(start, start + m))


def pf1_layout(n, method):
    dmrs = pf1_dmrs_symbols(n, method)
    uci = [s for s in range(n) if s not in dmrs]
    return Layout.from_symbols(n, SUBCARRIERS_PER_PRB, uci, dmrs)


def pf0_dmrs_layout(n_symbols):
    """Two-PRB study structure: DMRS on even, UCI on odd subcarriers."""
    k = np.arange(2 * SUBCARRIERS_PER_PRB)
    return Layout.from_subcarriers(n_symbols, k.size, k[1::2], k[0::2])


def pf0_seq_layout(n_symbols):
    return Layout.from_subcarriers(n_symbols, SUBCARRIERS_PER_PRB, range(SUBCARRIERS_PER_PRB), [])


def pf2_dmrs_subcarriers(n_prb, overhead):
    pattern = np.asarray(PF2_DMRS_PATTERNS[Pf2Overhead(overhead)])
    return (np.arange(n_prb)[:, None] * SUBCARRIERS_PER_PRB + pattern).ravel()


def pf2_layout(n_symbols, n_prb, overhead):
    dmrs = pf2_dmrs_subcarriers(n_prb, overhead)
    uci = np.setdiff1d(np.arange(n_prb * SUBCARRIERS_PER_PRB), dmrs)
    return Layout.from_subcarriers(n_symbols, n_prb * SUBCARRIERS_PER_PRB, uci, dmrs)


def pf3_dmrs_options(n):
    """Allowed DMRS symbol counts for a PF3/PF4 length."""
    if not 4 <= n <= 14:
        raise InvalidArgumentError(f"PF3/PF4 length must be in [4, 14], got {n}")
    if n == 4:
        return (1,)
    if n == 5:
        return (1, 2)
    if n < 10:
        return (2,)
    return (2, 4)


def pf3_dmrs_symbols(n, n_dmrs):
    """DMRS symbol indices.

    n = 4 uses symbol 1; one DMRS at n = 5 sits in the middle; two DMRS sit
    near n/4 and 3n/4; four DMRS are spread evenly at floor((2i+1)n/8).
    """
    if n_dmrs not in pf3_dmrs_options(n):
        raise InvalidArgumentError(f"{n_dmrs} DMRS symbols not supported for length {n}")
    if n == 4:
        return [1]
    if n_dmrs == 1:
        return [(n - 1) // 2]
    if n_dmrs == 2:
        return [n // 4, (3 * n) // 4]
    return [((2 * i + 1) * n) // 8 for i in range(4)]


def pf3_layout(n, n_prb, n_dmrs):
    dmrs = pf3_dmrs_symbols(n, n_dmrs)
    uci = [s for s in range(n) if s not in dmrs]
    return Layout.from_symbols(n, n_prb * SUBCARRIERS_PER_PRB, uci, dmrs)
