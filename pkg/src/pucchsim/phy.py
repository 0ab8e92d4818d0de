"""
Modulation, DFT precoding and resource-element mapping for the PUCCH region.

The simulator works at resource-element level: a grid covers only the
allocated symbols and ``12 * n_prb`` subcarriers, with no CP-OFDM synthesis.

Constellation conventions (positive LLR means bit 0):

* BPSK      ``d = 1 - 2b``
* pi/2-BPSK ``d(i) = (1 - 2b(i)) * exp(j*pi/2*(i mod 2))``
* QPSK      ``d = ((1 - 2b0) + j(1 - 2b1)) / sqrt(2)``
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgumentError, LayoutError

SUBCARRIERS_PER_PRB = 12
SYMBOLS_PER_SLOT = 14

PF3_PRB_COUNTS = frozenset([1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16])


class Format(str, Enum):
    PF0 = "PF0"
    PF1 = "PF1"
    PF2 = "PF2"
    PF3 = "PF3"
    PF4 = "PF4"


class Modulation(str, Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"
    PI2_BPSK = "PI2_BPSK"

    @property
    def bits_per_symbol(self):
        return 2 if self is Modulation.QPSK else 1


@dataclass(frozen=True)
class PucchConfig:
    """Resource and sequence parameters of one PUCCH transmission.

    ``dmrs_layout`` selects the per-format structure variant: ``"sequence"``
    or ``"dmrs"`` for PF0, ``"extension"`` or ``"puncturing"`` for PF1,
    ``"half"``, ``"third"`` or ``"quarter"`` for PF2, and the DMRS symbol
    count (1, 2 or 4) for PF3/PF4. ``None`` picks the adopted default.
    """

    format: Format
    n_symbols: int
    start_symbol: int = 0
    n_prb: int = 1
    prb_offset: int = 0
    group_index: int = 0
    cyclic_shift: int = 0
    time_occ_index: int = 0
    pre_dft_occ: Optional[Tuple[int, int]] = None   # (length, index)
    dmrs_layout: object = None
    modulation: Modulation = Modulation.QPSK
    n_id: int = 0
    rnti: int = 1
    slot: int = 0

    def __post_init__(self):
        object.__setattr__(self, "format", Format(self.format))
        object.__setattr__(self, "modulation", Modulation(self.modulation))
        if self.pre_dft_occ is not None:
            object.__setattr__(self, "pre_dft_occ", tuple(int(v) for v in self.pre_dft_occ))
        fmt, n = self.format, self.n_symbols
        if fmt in (Format.PF0, Format.PF2):
            if n not in (1, 2):
                raise InvalidArgumentError(f"{fmt.value} spans 1 or 2 symbols, got {n}")
        elif not 4 <= n <= 14:
            raise InvalidArgumentError(f"{fmt.value} spans 4 to 14 symbols, got {n}")
        if not 0 <= self.start_symbol <= 13 or self.start_symbol + n > SYMBOLS_PER_SLOT:
            raise InvalidArgumentError("start_symbol + n_symbols must fit in 14 symbols")
        if fmt in (Format.PF1, Format.PF4) and self.n_prb != 1:
            raise InvalidArgumentError(f"{fmt.value} occupies exactly 1 PRB")
        if fmt is Format.PF0 and self.n_prb != (2 if self.dmrs_layout == "dmrs" else 1):
            raise InvalidArgumentError(
                "PF0 occupies 1 PRB (2 PRBs for the DMRS-based study structure)")
        if fmt is Format.PF2 and not 1 <= self.n_prb <= 16:
            raise InvalidArgumentError("PF2 occupies 1 to 16 PRBs")
        if fmt is Format.PF3 and self.n_prb not in PF3_PRB_COUNTS:
            raise InvalidArgumentError(f"PF3 PRB count {self.n_prb} not allowed")
        if not 0 <= self.group_index <= 29:
            raise InvalidArgumentError("group_index must be in [0, 29]")
        if not 0 <= self.cyclic_shift <= 11:
            raise InvalidArgumentError("cyclic_shift must be in [0, 11]")
        if fmt is Format.PF4:
            if self.pre_dft_occ is None:
                object.__setattr__(self, "pre_dft_occ", (2, 0))
            length, index = self.pre_dft_occ
            if length not in (2, 4) or not 0 <= index < length:
                raise InvalidArgumentError("PF4 pre-DFT OCC must be (2|4, index)")

    @property
    def n_subcarriers(self):
        return SUBCARRIERS_PER_PRB * self.n_prb


@dataclass
class ResourceGrid:
    """Complex RE samples of shape (n_ports, n_symbols, n_subcarriers)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 2:
            s = s[None]
        if s.ndim != 3:
            raise InvalidArgumentError("grid samples must be (ports, symbols, subcarriers)")
        if s.shape[2] % SUBCARRIERS_PER_PRB:
            raise InvalidArgumentError("subcarrier count must be a multiple of 12")
        self.samples = s

    @classmethod
    def zeros(cls, n_symbols, n_subcarriers, n_ports=1):
        return cls(np.zeros((n_ports, n_symbols, n_subcarriers), dtype=complex))

    @property
    def n_ports(self):
        return self.samples.shape[0]

    @property
    def n_symbols(self):
        return self.samples.shape[1]

    @property
    def n_subcarriers(self):
        return self.samples.shape[2]

    @property
    def n_prb(self):
        return self.n_subcarriers // SUBCARRIERS_PER_PRB

    def occupied(self):
        return np.abs(self.samples) > 0

    def to_csv(self, path, port=0):
        """Dump one port as rows of (symbol, subcarrier, re, im)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["symbol", "subcarrier", "re", "im"])
            for s in range(self.n_symbols):
                for k in range(self.n_subcarriers):
                    v = self.samples[port, s, k]
                    w.writerow([s, k, repr(float(v.real)), repr(float(v.imag))])


@dataclass(frozen=True)
class Layout:
    """RE positions for UCI and DMRS as (symbol, subcarrier) index arrays."""

    n_symbols: int
    n_subcarriers: int
    uci: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))
    dmrs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))

    @classmethod
    def from_symbols(cls, n_symbols, n_subcarriers, uci_symbols, dmrs_symbols):
        """Whole-symbol layout (TDM structure): every subcarrier of each listed symbol."""
        k = np.arange(n_subcarriers)

        def expand(symbols):
            symbols = np.asarray(list(symbols), dtype=int)
            if symbols.size == 0:
                return np.zeros((0, 2), dtype=int)
            return np.stack(np.broadcast_arrays(symbols[:, None], k[None, :]), -1).reshape(-1, 2)

        return cls(n_symbols, n_subcarriers, expand(uci_symbols), expand(dmrs_symbols))

    @classmethod
    def from_subcarriers(cls, n_symbols, n_subcarriers, uci_subcarriers, dmrs_subcarriers):
        """FDM layout repeated on every symbol."""
        s = np.arange(n_symbols)

        def expand(sc):
            sc = np.asarray(list(sc), dtype=int)
            if sc.size == 0:
                return np.zeros((0, 2), dtype=int)
            return np.stack(np.broadcast_arrays(s[:, None], sc[None, :]), -1).reshape(-1, 2)

        return cls(n_symbols, n_subcarriers, expand(uci_subcarriers), expand(dmrs_subcarriers))

    def check(self):
        for name, pos in (("uci", self.uci), ("dmrs", self.dmrs)):
            if pos.size and (pos.min() < 0 or pos[:, 0].max() >= self.n_symbols
                             or pos[:, 1].max() >= self.n_subcarriers):
                raise LayoutError(f"{name} positions fall outside the grid")
        flat = np.concatenate([self.uci[:, 0] * self.n_subcarriers + self.uci[:, 1],
                               self.dmrs[:, 0] * self.n_subcarriers + self.dmrs[:, 1]])
        if np.unique(flat).size != flat.size:
            raise LayoutError("UCI and DMRS positions overlap or repeat")


def modulate(bits, scheme) -> np.ndarray:
    """Map bits (last axis) to unit-average-energy symbols."""
    scheme = Modulation(scheme)
    b = np.asarray(bits)
    if scheme is Modulation.QPSK:
        if b.shape[-1] % 2:
            raise InvalidArgumentError("QPSK needs an even number of bits")
        s = 1.0 - 2.0 * b
        return (s[..., 0::2] + 1j * s[..., 1::2]) / np.sqrt(2)
    d = (1.0 - 2.0 * b).astype(complex)
    if scheme is Modulation.PI2_BPSK:
        d = d * np.exp(0.5j * np.pi * (np.arange(b.shape[-1]) % 2))
    return d


def demodulate_llr(symbols, noise_var, scheme) -> np.ndarray:
    """Max-log (exact for these maps) bit LLRs from unbiased symbol estimates.

    ``noise_var`` is the complex noise variance of each estimate and
    broadcasts against ``symbols``.
    """
    scheme = Modulation(scheme)
    z = np.asarray(symbols)
    nv = np.asarray(noise_var, dtype=float)
    if scheme is Modulation.QPSK:
        scale = 2.0 * np.sqrt(2.0) / nv
        llr = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
        llr[..., 0::2] = scale * z.real
        llr[..., 1::2] = scale * z.imag
        return llr
    if scheme is Modulation.PI2_BPSK:
        z = z * np.exp(-0.5j * np.pi * (np.arange(z.shape[-1]) % 2))
    return 4.0 * z.real / nv


def dft_precode(symbols, block_size) -> np.ndarray:
    """Unitary DFT (scale 1/sqrt(M)) over consecutive blocks of ``block_size``."""
    x = np.asarray(symbols, dtype=complex)
    if block_size < 1 or x.shape[-1] % block_size:
        raise InvalidArgumentError("input length must be a multiple of the block size")
    blocks = x.reshape(x.shape[:-1] + (-1, block_size))
    return np.fft.fft(blocks, axis=-1, norm="ortho").reshape(x.shape)


def dft_deprecode(symbols, block_size) -> np.ndarray:
    """Inverse of :func:`dft_precode`."""
    x = np.asarray(symbols, dtype=complex)
    if block_size < 1 or x.shape[-1] % block_size:
        raise InvalidArgumentError("input length must be a multiple of the block size")
    blocks = x.reshape(x.shape[:-1] + (-1, block_size))
    return np.fft.ifft(blocks, axis=-1, norm="ortho").reshape(x.shape)


def map_to_grid(layout: Layout, uci_res, dmrs_res) -> np.ndarray:
    """Batched mapping; returns samples of shape (..., n_symbols, n_subcarriers)."""
    uci_res = np.asarray(uci_res)
    dmrs_res = np.asarray(dmrs_res)
    if uci_res.shape[-1] != len(layout.uci) or dmrs_res.shape[-1] != len(layout.dmrs):
        raise LayoutError(
            f"resource counts ({uci_res.shape[-1]}, {dmrs_res.shape[-1]}) do not match "
            f"layout ({len(layout.uci)}, {len(layout.dmrs)})")
    lead = np.broadcast_shapes(uci_res.shape[:-1], dmrs_res.shape[:-1])
    grid = np.zeros(lead + (layout.n_symbols, layout.n_subcarriers), dtype=complex)
    grid[..., layout.uci[:, 0], layout.uci[:, 1]] = uci_res
    grid[..., layout.dmrs[:, 0], layout.dmrs[:, 1]] = dmrs_res
    return grid


def map_pucch(cfg: PucchConfig, uci_res, dmrs_res, layout: Layout) -> ResourceGrid:
    """Place UCI and DMRS values on their REs; every other RE stays zero."""
    layout.check()
    if (layout.n_symbols, layout.n_subcarriers) != (cfg.n_symbols, cfg.n_subcarriers):
        raise LayoutError("layout dimensions differ from the configuration")
    return ResourceGrid(map_to_grid(layout, uci_res, dmrs_res))


def extract_pucch(grid, layout: Layout):
    """Inverse of :func:`map_pucch`: ``(uci_res, dmrs_res)`` per port.

    Accepts a :class:`ResourceGrid` or a raw array (..., symbols, subcarriers).
    A single-port grid returns 1-D vectors.
    """
    samples = grid.samples if isinstance(grid, ResourceGrid) else np.asarray(grid)
    n_sym, n_sc = samples.shape[-2:]
    for name, pos in (("uci", layout.uci), ("dmrs", layout.dmrs)):
        if pos.size and (pos.min() < 0 or pos[:, 0].max() >= n_sym or pos[:, 1].max() >= n_sc):
            raise LayoutError(f"{name} positions fall outside the grid")
    uci = samples[..., layout.uci[:, 0], layout.uci[:, 1]]
    dmrs = samples[..., layout.dmrs[:, 0], layout.dmrs[:, 1]]
    if isinstance(grid, ResourceGrid) and grid.n_ports == 1:
        return uci[0], dmrs[0]
    return uci, dmrs


def bits_to_int(bits: Sequence[int]) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v
