"""
Deterministic Monte Carlo engine.

Trial ``t`` of a run seeded with ``seed`` draws everything (message state,
payload, fading rays, unit-variance noise) from its own counter-based
Philox stream keyed by ``(seed, t)``. The same noise draw is scaled to
every SNR of a sweep, so points share channel and noise realisations.
Counters are integers summed over fixed-size trial chunks, which makes the
output independent of execution order and worker count.

SNR is the per-RE Es/N0 at each receive antenna: transmit REs have unit
power and the noise variance per RE is ``10 ** (-snr_db / 10)``.
"""
from __future__ import annotations

import csv
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb, erfc

from .channel import (doppler_hz, draw_fading_params, fading_response, symbol_duration,
                      tdl_c_profile)
from .errors import ConfigError, InsufficientSamplesError, InvalidArgumentError
from .phy import Format, PucchConfig
from .pucch.chains import Chain, ReceiverOptions, make_chain

CSV_HEADER = ("snr_db", "trials", "ack_sent", "ack_to_nack", "ack_to_dtx", "nack_to_ack",
              "dtx_to_ack", "missed_ack_ber", "nack_to_ack_rate", "dtx_to_ack_rate", "bler",
              "ci_low", "ci_high")

CHUNK_SIZE = 500

# stream domains keep simulation, calibration and false-alarm draws disjoint
DOMAIN_SIM, DOMAIN_CALIBRATE, DOMAIN_FALSE_ALARM = 0, 1, 2

ACK, NACK, DTX = 0, 1, 2


def trial_rng(seed, trial, domain=DOMAIN_SIM):
    """Independent generator for one trial."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, int(trial), int(domain), 0]))


@dataclass(frozen=True)
class Scenario:
    """One simulated configuration; defaults follow the reference setup.

    ``variant`` selects the structure inside a format: "sequence"/"dmrs"
    (PF0), "extension"/"puncturing" (PF1), "half"/"third"/"quarter" (PF2),
    or the DMRS symbol count (PF3/PF4).
    """

    format: str = "PF0"
    variant: object = None
    n_symbols: int = 1
    start_symbol: int = 0
    n_prb: Optional[int] = None
    group_index: int = 0
    cyclic_shift: int = 0
    time_occ_index: int = 0
    pre_dft_occ: Optional[Tuple[int, int]] = None
    modulation: str = "QPSK"
    n_id: int = 0
    rnti: int = 1
    slot: int = 0
    payload_bits: int = 2
    carrier_hz: float = 4e9
    bandwidth_hz: float = 20e6
    scs_hz: float = 15e3
    n_tx: int = 1
    n_rx: int = 2
    power_reference: str = "re"
    channel: str = "TDL-C"
    delay_spread_s: float = 300e-9
    velocity_kmh: float = 3.0
    estimation: str = "mmse"
    freq_estimation: str = "mmse"
    time_combining: str = "interpolate"
    assumed_delay_spread_s: Optional[float] = None
    list_size: int = 8
    trials: int = 10000
    base_seed: int = 1
    snr_grid_db: Tuple[float, ...] = (0.0,)
    ack_fraction: float = 0.45
    nack_fraction: float = 0.45
    dtx_fraction: float = 0.10
    dtx_gate: bool = True
    dtx_target: float = 1e-2
    dtx_threshold: Optional[float] = None
    calibration_trials: int = 100000

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(v) for v in self.snr_grid_db))
        if self.pre_dft_occ is not None:
            object.__setattr__(self, "pre_dft_occ", tuple(int(v) for v in self.pre_dft_occ))
        if isinstance(self.variant, str) and self.variant.isdigit():
            object.__setattr__(self, "variant", int(self.variant))
        self.validate()

    def validate(self):
        if self.format not in {f.value for f in Format}:
            raise ConfigError(f"unknown format {self.format!r}")
        if self.channel not in ("AWGN", "TDL-C"):
            raise ConfigError(f"channel must be AWGN or TDL-C, got {self.channel!r}")
        if self.n_tx != 1:
            raise ConfigError("only single-antenna transmission is modelled")
        if self.power_reference not in ("re", "prb"):
            raise ConfigError("power_reference must be 're' or 'prb'")
        if self.n_rx < 1:
            raise ConfigError("n_rx must be at least 1")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.channel == "TDL-C" and not self.delay_spread_s > 0:
            raise ConfigError("delay_spread_s must be positive for TDL-C")
        if self.velocity_kmh < 0:
            raise ConfigError("velocity_kmh must be non-negative")
        mix = (self.ack_fraction, self.nack_fraction, self.dtx_fraction)
        if min(mix) < 0 or abs(sum(mix) - 1.0) > 1e-9:
            raise ConfigError("ack/nack/dtx fractions must be non-negative and sum to 1")
        if not 0 < self.dtx_target < 1:
            raise ConfigError("dtx_target must lie in (0, 1)")
        if self.format in ("PF0", "PF1") and self.payload_bits not in (1, 2):
            raise ConfigError(f"{self.format} carries 1 or 2 bits")
        if self.format in ("PF2", "PF3", "PF4") and self.payload_bits <= 2:
            raise ConfigError(f"{self.format} carries more than 2 bits")
        try:
            chain = self.build_chain()
        except (InvalidArgumentError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return chain

    # derived objects
    def pucch_config(self) -> PucchConfig:
        n_prb = self.n_prb
        if n_prb is None:
            n_prb = {"PF2": 4}.get(self.format, 1)
            if self.format == "PF0" and self.variant == "dmrs":
                n_prb = 2
        return PucchConfig(
            format=self.format, n_symbols=self.n_symbols, start_symbol=self.start_symbol,
            n_prb=n_prb, group_index=self.group_index, cyclic_shift=self.cyclic_shift,
            time_occ_index=self.time_occ_index, pre_dft_occ=self.pre_dft_occ,
            dmrs_layout=self.variant, modulation=self.modulation, n_id=self.n_id,
            rnti=self.rnti, slot=self.slot)

    def receiver_options(self) -> ReceiverOptions:
        assumed = self.assumed_delay_spread_s
        if assumed is None:
            assumed = self.delay_spread_s if self.channel == "TDL-C" else 0.0
        return ReceiverOptions(self.estimation, assumed, self.freq_estimation,
                               self.time_combining, self.list_size, self.scs_hz)

    def build_chain(self) -> Chain:
        return make_chain(self.pucch_config(), self.payload_bits, self.receiver_options())

    def tx_amplitude(self, chain=None):
        """Per-RE amplitude: 1, or with ``power_reference == "prb"`` the
        amplitude that keeps the total power of every symbol at one PRB's worth."""
        if self.power_reference == "re":
            return 1.0
        chain = chain or self.build_chain()
        return math.sqrt(12.0 / chain.n_subcarriers)

    @property
    def harq(self):
        return self.format in ("PF0", "PF1")

    def ebn0_offset_db(self):
        """Eb/N0 minus per-RE SNR: UCI energy over all REs and antennas per bit."""
        chain = self.build_chain()
        energy = len(chain.layout.uci) * self.n_rx * self.tx_amplitude(chain) ** 2
        return 10 * math.log10(energy / self.payload_bits)

    def with_overrides(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def to_dict(self):
        d = asdict(self)
        d["snr_grid_db"] = list(self.snr_grid_db)
        if self.pre_dft_occ is not None:
            d["pre_dft_occ"] = list(self.pre_dft_occ)
        return d

    @classmethod
    def from_dict(cls, data, source_text=None) -> "Scenario":
        if not isinstance(data, dict):
            raise ConfigError("scenario must be a JSON object", 1)
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown scenario field {key!r}", _line_of(source_text, key))
        try:
            return cls(**data)
        except ConfigError as exc:
            if exc.line is None and source_text is not None:
                exc.line = _guess_line(source_text, str(exc), data)
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), _guess_line(source_text, str(exc), data)) from exc

    @classmethod
    def from_json(cls, path) -> "Scenario":
        with open(path) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
        return cls.from_dict(data, text)


def _line_of(text, key):
    if text is None:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _guess_line(text, message, data):
    # point at the field the message names or quotes, else the first line
    if text is None:
        return None
    for key, value in data.items():
        if key in message or (isinstance(value, str) and repr(value) in message):
            return _line_of(text, key)
    for key, value in data.items():
        if (isinstance(value, (int, float)) and not isinstance(value, bool)
                and re.search(rf"(?<![\w.]){re.escape(str(value))}(?![\w.])", message)):
            return _line_of(text, key)
    return 1


@dataclass
class MetricsRecord:
    """Integer transition counters for one SNR point.

    Rates are derived. ``primary`` names the metric whose Wilson interval
    goes into the CSV row: "missed_ack_ber" for HARQ formats, "bler" for
    coded payload formats.
    """

    snr_db: float
    trials: int = 0
    ack_sent: int = 0
    ack_to_nack: int = 0
    ack_to_dtx: int = 0
    nack_sent: int = 0
    nack_to_ack: int = 0
    dtx_sent: int = 0
    dtx_to_ack: int = 0
    block_errors: int = 0
    blocks: int = 0
    bit_errors: int = 0
    bits: int = 0
    primary: str = "missed_ack_ber"

    COUNTERS = ("trials", "ack_sent", "ack_to_nack", "ack_to_dtx", "nack_sent", "nack_to_ack",
                "dtx_sent", "dtx_to_ack", "block_errors", "blocks", "bit_errors", "bits")

    @classmethod
    def from_counts(cls, snr_db, counts, primary):
        return cls(float(snr_db), *[int(v) for v in counts], primary=primary)

    @staticmethod
    def _rate(num, den):
        return num / den if den else float("nan")

    @property
    def missed_ack_ber(self):
        return self._rate(self.ack_to_nack + self.ack_to_dtx, self.ack_sent)

    @property
    def nack_to_ack_rate(self):
        return self._rate(self.nack_to_ack, self.nack_sent)

    @property
    def dtx_to_ack_rate(self):
        return self._rate(self.dtx_to_ack, self.dtx_sent)

    @property
    def bler(self):
        return self._rate(self.block_errors, self.blocks)

    @property
    def ber(self):
        return self._rate(self.bit_errors, self.bits)

    def interval(self, name=None):
        """Wilson 95 % interval of a rate by name."""
        name = name or self.primary
        num, den = {
            "missed_ack_ber": (self.ack_to_nack + self.ack_to_dtx, self.ack_sent),
            "nack_to_ack_rate": (self.nack_to_ack, self.nack_sent),
            "dtx_to_ack_rate": (self.dtx_to_ack, self.dtx_sent),
            "bler": (self.block_errors, self.blocks),
            "ber": (self.bit_errors, self.bits),
        }[name]
        return wilson_interval(num, den)

    def csv_row(self):
        lo, hi = self.interval()
        vals = [self.snr_db, self.trials, self.ack_sent, self.ack_to_nack, self.ack_to_dtx,
                self.nack_to_ack, self.dtx_to_ack, self.missed_ack_ber, self.nack_to_ack_rate,
                self.dtx_to_ack_rate, self.bler, lo, hi]
        return [_fmt(v) for v in vals]


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def wilson_interval(successes, n, z=1.959963984540054):
    if n == 0:
        return float("nan"), float("nan")
    p = successes / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


# ---------------------------------------------------------------- engine

@dataclass
class _Draws:
    state: np.ndarray
    bits: np.ndarray
    angles: Optional[np.ndarray]
    phases: Optional[np.ndarray]
    noise: np.ndarray


def _draw_chunk(scn: Scenario, chain: Chain, trials: range, seed, domain=DOMAIN_SIM, signal=True):
    K = scn.payload_bits
    shape = (scn.n_rx,) + chain.subcarrier_shape
    n_taps = 1 if scn.channel == "AWGN" else 24
    states, bits, angles, phases, noise = [], [], [], [], []
    mix = np.cumsum([scn.ack_fraction, scn.nack_fraction])
    for t in trials:
        rng = trial_rng(seed, t, domain)
        if signal:
            u = rng.random()
            state = ACK if u < mix[0] else (NACK if u < mix[1] else DTX)
            states.append(state)
            if scn.harq:
                bits.append(np.full(K, 1 if state == ACK else 0, np.uint8))
            else:
                bits.append(rng.integers(0, 2, K, dtype=np.uint8))
            if scn.channel == "TDL-C":
                a, p = draw_fading_params(rng, scn.n_rx, n_taps)
                angles.append(a)
                phases.append(p)
        w = rng.standard_normal(shape + (2,))
        noise.append(w[..., 0] + 1j * w[..., 1])
    noise = np.sqrt(0.5) * np.stack(noise)
    if not signal:
        return _Draws(None, None, None, None, noise)
    return _Draws(np.array(states), np.stack(bits),
                  np.stack(angles) if angles else None,
                  np.stack(phases) if phases else None, noise)


def _channel_for(scn: Scenario, chain: Chain, draws: _Draws):
    B = draws.noise.shape[0]
    if scn.channel == "AWGN":
        return np.ones((B, scn.n_rx) + chain.subcarrier_shape, dtype=complex)
    profile = tdl_c_profile(scn.delay_spread_s)
    fd = doppler_hz(scn.velocity_kmh, scn.carrier_hz)
    times = (scn.start_symbol + np.arange(chain.n_symbols)) * symbol_duration(scn.scs_hz)
    freqs = np.arange(chain.n_subcarriers) * scn.scs_hz
    return fading_response(profile, draws.angles, draws.phases, fd, times, freqs)


def _decide(chain: Chain, out, threshold):
    if chain.gate == "crc":
        return np.asarray(out.crc_pass, dtype=bool)
    if threshold is None:
        return np.ones(out.metric.shape, dtype=bool)
    return out.metric > threshold


def _tally(state, sent_bits, out, detected):
    """Counter vector in MetricsRecord.COUNTERS order."""
    K = sent_bits.shape[1]
    present = state != DTX
    errs = np.sum(out.bits != sent_bits, axis=1)
    correct = errs == 0
    ack, nack, dtx = state == ACK, state == NACK, state == DTX
    bit_err = np.where(detected, errs, K)
    return np.array([
        state.size, ack.sum(), (ack & detected & ~correct).sum(), (ack & ~detected).sum(),
        nack.sum(), (nack & detected & ~correct).sum(), dtx.sum(), (dtx & detected).sum(),
        (present & ~(detected & correct)).sum(), present.sum(),
        bit_err[present].sum(), K * present.sum(),
    ], dtype=np.int64)


def _run_chunk(args):
    scn, snrs, start, stop, seed, threshold = args
    chain = scn.build_chain()
    draws = _draw_chunk(scn, chain, range(start, stop), seed)
    h = _channel_for(scn, chain, draws) * scn.tx_amplitude(chain)
    tx = chain.transmit(draws.bits)
    tx[draws.state == DTX] = 0
    clean = h * tx[:, None]
    h_true = h if scn.estimation == "ideal" else None
    counts = []
    for snr in snrs:
        nv = 10.0 ** (-snr / 10.0)
        out = chain.receive(clean + math.sqrt(nv) * draws.noise, nv, h_true)
        counts.append(_tally(draws.state, draws.bits, out, _decide(chain, out, threshold)))
    return np.stack(counts)


def _chunks(trials):
    return [(s, min(s + CHUNK_SIZE, trials)) for s in range(0, trials, CHUNK_SIZE)]


def _map(fn, jobs, workers):
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def resolve_threshold(scn: Scenario, workers=1):
    """DTX threshold to use for ``scn``: explicit, calibrated, or None (no gate)."""
    chain = scn.build_chain()
    if chain.gate == "crc" or not scn.dtx_gate:
        return None
    if scn.dtx_threshold is not None:
        return float(scn.dtx_threshold)
    return calibrate_dtx_threshold(scn, scn.dtx_target, scn.calibration_trials, workers=workers)


def _sweep(scn, snrs, trials, seed, threshold, workers):
    jobs = [(scn, tuple(snrs), a, b, seed, threshold) for a, b in _chunks(trials)]
    total = sum(_map(_run_chunk, jobs, workers))
    primary = "missed_ack_ber" if scn.harq else "bler"
    return [MetricsRecord.from_counts(s, c, primary) for s, c in zip(snrs, total)]


def run_point(scn: Scenario, snr_db, trials=None, seed=None, threshold="auto", workers=1) -> MetricsRecord:
    """Simulate one SNR point."""
    trials = scn.trials if trials is None else int(trials)
    if trials < 1:
        raise InvalidArgumentError("trials must be at least 1")
    seed = scn.base_seed if seed is None else seed
    if threshold == "auto":
        threshold = resolve_threshold(scn, workers)
    return _sweep(scn, [float(snr_db)], trials, seed, threshold, workers)[0]


def sweep_snr(scn: Scenario, workers=1, threshold="auto") -> List[MetricsRecord]:
    """Simulate every point of ``scn.snr_grid_db``; records are sorted by SNR."""
    if not scn.snr_grid_db:
        raise ConfigError("snr_grid_db is empty")
    if threshold == "auto":
        threshold = resolve_threshold(scn, workers)
    snrs = sorted(scn.snr_grid_db)
    return _sweep(scn, snrs, scn.trials, scn.base_seed, threshold, workers)


def _noise_metrics_chunk(args):
    scn, start, stop, seed, domain = args
    chain = scn.build_chain()
    draws = _draw_chunk(scn, chain, range(start, stop), seed, domain, signal=False)
    return chain.receive(draws.noise, 1.0).metric


def noise_only_metrics(scn: Scenario, trials, seed=None, domain=DOMAIN_CALIBRATE, workers=1):
    """Detection metrics of ``trials`` noise-only receptions (unit noise variance)."""
    seed = scn.base_seed if seed is None else seed
    jobs = [(scn, a, b, seed, domain) for a, b in _chunks(int(trials))]
    return np.concatenate(_map(_noise_metrics_chunk, jobs, workers))


def calibrate_dtx_threshold(scn: Scenario, target=1e-2, trials=None, seed=None, workers=1) -> float:
    """Threshold whose noise-only exceedance rate is ``target``.

    The detection metrics are normalised by the noise variance, so one
    threshold serves every SNR.
    """
    if not 0 < target < 1:
        raise InvalidArgumentError("target must lie in (0, 1)")
    trials = scn.calibration_trials if trials is None else int(trials)
    if trials < 10 / target:
        raise InsufficientSamplesError(
            f"{trials} trials are too few for a {target:g} quantile (need {math.ceil(10 / target)})")
    if scn.build_chain().gate == "crc":
        raise InvalidArgumentError("CRC-gated formats need no DTX threshold")
    m = noise_only_metrics(scn, trials, seed, DOMAIN_CALIBRATE, workers)
    return float(np.quantile(m, 1.0 - target))


def measure_dtx_to_ack(scn: Scenario, threshold, trials, seed=None, workers=1) -> float:
    """DTX-to-ACK rate on fresh noise-only trials (an independent stream domain)."""
    m = noise_only_metrics(scn, trials, seed, DOMAIN_FALSE_ALARM, workers)
    return float(np.mean(m > threshold))


# ---------------------------------------------------------------- oracles

class OracleScheme(str, Enum):
    COHERENT_BPSK = "COHERENT_BPSK"
    COHERENT_QPSK = "COHERENT_QPSK"
    NONCOH_ORTH_2 = "NONCOH_ORTH_2"
    NONCOH_ORTH_4 = "NONCOH_ORTH_4"


def _noncoherent_orthogonal(M, ebn0):
    # exact symbol error rate of square-law detection of M orthogonal signals
    k = math.log2(M)
    es = k * ebn0
    n = np.arange(1, M)
    terms = (-1.0) ** (n + 1) * comb(M - 1, n) / (n + 1)
    ps = np.sum(terms[:, None] * np.exp(-np.outer(n / (n + 1), np.atleast_1d(es))), axis=0)
    return ps * M / (2 * (M - 1))


def analytic_ber(scheme, ebn0_db):
    """Closed-form AWGN bit error rate at ``ebn0_db`` (scalar or array)."""
    scheme = OracleScheme(scheme)
    g = 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)
    if scheme in (OracleScheme.COHERENT_BPSK, OracleScheme.COHERENT_QPSK):
        out = 0.5 * erfc(np.sqrt(g))
    elif scheme is OracleScheme.NONCOH_ORTH_2:
        out = 0.5 * np.exp(-g / 2)
    else:
        out = _noncoherent_orthogonal(4, g).reshape(g.shape)
    return float(out) if np.ndim(out) == 0 else out


def ebn0_at_ber(scheme, target, lo=-10.0, hi=30.0):
    """Eb/N0 (dB) where the closed form equals ``target`` (bisection)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if analytic_ber(scheme, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def snr_at_rate(snrs: Sequence[float], rates: Sequence[float], target: float):
    """First SNR where the curve crosses ``target``, log-linear interpolation.

    Returns None when the curve never reaches the target.
    """
    s = np.asarray(snrs, dtype=float)
    r = np.asarray(rates, dtype=float)
    for i in range(len(s)):
        if r[i] <= target:
            if i == 0:
                return float(s[0]) if r[0] == target else None
            a, b = r[i - 1], r[i]
            if b <= 0:
                return float(s[i])
            la, lb, lt = math.log10(a), math.log10(b), math.log10(target)
            return float(s[i - 1] + (la - lt) / (la - lb) * (s[i] - s[i - 1]))
    return None


# ---------------------------------------------------------------- output

def write_csv(path_or_file, records, curve=None):
    """Write records with the fixed header; ``curve`` labels add a leading column.

    ``records`` is a list of MetricsRecord, or with ``curve=True`` a list of
    ``(label, [MetricsRecord, ...])`` pairs.
    """
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        if curve:
            w.writerow(("curve",) + CSV_HEADER)
            for label, recs in records:
                for r in recs:
                    w.writerow([label] + r.csv_row())
        else:
            w.writerow(CSV_HEADER)
            for r in records:
                w.writerow(r.csv_row())
    finally:
        if own:
            fh.close()
