import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc

from pucchsim.errors import InsufficientRateError, InvalidArgumentError
from pucchsim.fec import (code_kind, crc_attach, crc_check, crc_length, polar_decode,
                          polar_encode, rate_match, rm32_decode, rm32_encode, uci_decode,
                          uci_encode)
from pucchsim.fec.polar import SUB_BLOCK_PATTERN, construct, polar_transform, sub_block_interleaver
from pucchsim.fec.reed_muller import generator_matrix


def bits(rng, *shape):
    return rng.integers(0, 2, shape).astype(np.uint8)


def bipolar(c):
    return 1.0 - 2.0 * np.asarray(c, dtype=float)


# ---------------------------------------------------------------- CRC

def test_crc_lengths():
    assert [crc_length(k) for k in (11, 12, 19, 20, 64)] == [0, 6, 6, 11, 11]


def test_crc_zero_input():
    word = crc_attach(np.zeros(20, np.uint8))
    assert word.shape == (31,) and not word.any()


@given(st.integers(12, 64), st.integers(0, 2 ** 32 - 1))
def test_crc_round_trip(K, seed):
    b = bits(np.random.default_rng(seed), K)
    assert crc_check(crc_attach(b), K)


@pytest.mark.parametrize("K", [12, 19, 20, 40])
def test_crc_detects_every_single_flip(K):
    rng = np.random.default_rng(K)
    for b in bits(rng, 20, K):
        word = crc_attach(b)
        assert crc_check(word, K)
        flips = np.repeat(word[None], word.size, axis=0) ^ np.eye(word.size, dtype=np.uint8)
        assert not np.any(crc_check(flips, K))


def test_crc_random_word_acceptance():
    n = 10 ** 6
    words = bits(np.random.default_rng(11), n, 31)
    accepted = int(np.sum(crc_check(words, 20)))
    expected = n * 2.0 ** -11
    # 4 sigma binomial band
    assert abs(accepted - expected) < 4 * np.sqrt(expected)


def test_crc_argument_errors():
    with pytest.raises(InvalidArgumentError):
        crc_attach(np.zeros(11, np.uint8))
    with pytest.raises(InvalidArgumentError):
        crc_check(np.zeros(30, np.uint8), 20)


# ---------------------------------------------------------------- Reed-Muller

def test_code_kind_split():
    assert code_kind(3) == code_kind(11) == "small_block"
    assert code_kind(12) == "polar"
    with pytest.raises(InvalidArgumentError):
        code_kind(2)


def test_rm_linearity_basics():
    G = generator_matrix(7)
    assert not rm32_encode(np.zeros(7, np.uint8)).any()
    for i in range(7):
        e = np.zeros(7, np.uint8)
        e[i] = 1
        assert np.array_equal(rm32_encode(e), G[i])


@given(st.integers(3, 11), st.integers(0, 2 ** 32 - 1))
def test_rm_sum_maps_to_xor(K, seed):
    a, b = bits(np.random.default_rng(seed), 2, K)
    assert np.array_equal(rm32_encode(a ^ b), rm32_encode(a) ^ rm32_encode(b))


@pytest.mark.parametrize("K", range(3, 12))
def test_rm_exhaustive_noiseless(K):
    idx = np.arange(2 ** K)
    payloads = ((idx[:, None] >> np.arange(K - 1, -1, -1)) & 1).astype(np.uint8)
    llr = 10 * bipolar(rm32_encode(payloads))
    assert np.array_equal(rm32_decode(llr, K), payloads)


def test_rm_tie_breaks_to_lowest_index():
    assert not rm32_decode(np.zeros(32), 6).any()


def test_rm_range():
    with pytest.raises(InvalidArgumentError):
        rm32_encode(np.zeros(12, np.uint8))


def test_rm_beats_uncoded_at_8db():
    rng = np.random.default_rng(5)
    n, K, ebn0 = 20000, 4, 10 ** 0.8
    payload = bits(rng, n, K)
    # coded: 32 BPSK symbols carry K bits
    es_coded = ebn0 * K / 32
    y = bipolar(rm32_encode(payload)) + rng.standard_normal((n, 32)) / np.sqrt(2 * es_coded)
    coded = np.mean(np.any(rm32_decode(y, K) != payload, axis=1))
    z = bipolar(payload) + rng.standard_normal((n, K)) / np.sqrt(2 * ebn0)
    uncoded = np.mean(np.any((z < 0) != payload.astype(bool), axis=1))
    oracle = 1 - (1 - 0.5 * erfc(np.sqrt(ebn0))) ** K
    assert uncoded > 0.5 * oracle
    assert coded < uncoded


# ---------------------------------------------------------------- polar

def reference_interleaver(N):
    out = []
    for n in range(N):
        i = (32 * n) // N
        out.append(SUB_BLOCK_PATTERN[i] * (N // 32) + n % (N // 32))
    return np.array(out)


@pytest.mark.parametrize("N", [32, 64, 128, 512])
def test_sub_block_interleaver_is_documented_permutation(N):
    J = sub_block_interleaver(N)
    assert np.array_equal(J, reference_interleaver(N))
    assert np.array_equal(np.sort(J), np.arange(N))


def test_rate_match_examples():
    rng = np.random.default_rng(1)
    x = bits(rng, 64)
    assert np.array_equal(rate_match(x, 64), x)
    y = bits(rng, 32)
    assert np.array_equal(rate_match(y, 64), np.concatenate([y, y]))
    assert np.array_equal(rate_match(x, 48), x[:48])
    assert np.array_equal(rate_match(x, 48, K=20), x[16:])


def test_polar_shortening_uses_interleaved_buffer():
    # 31 bits into E = 48 uses N = 64 with shortening
    rng = np.random.default_rng(2)
    b = crc_attach(bits(rng, 20))
    code = construct(31, 48)
    assert (code.N, code.mode) == (64, "shortening")
    u = np.zeros(64, np.uint8)
    u[code.info_mask] = b
    expected = polar_transform(u)[reference_interleaver(64)][:48]
    assert np.array_equal(polar_encode(b, 48), expected)


def test_polar_zero_and_length():
    assert not polar_encode(np.zeros(31, np.uint8), 64).any()
    assert uci_encode(bits(np.random.default_rng(0), 20), 64).shape == (64,)


def test_polar_insufficient_rate():
    with pytest.raises(InsufficientRateError):
        polar_encode(np.zeros(31, np.uint8), 30)
    with pytest.raises(InsufficientRateError):
        uci_encode(np.zeros(20, np.uint8), 30)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25)
def test_polar_linear(seed):
    a, b = bits(np.random.default_rng(seed), 2, 20)
    assert np.array_equal(uci_encode(a ^ b, 96), uci_encode(a, 96) ^ uci_encode(b, 96))


@pytest.mark.parametrize("K,E", [(12, 24), (12, 40), (20, 48), (20, 64), (20, 72),
                                 (20, 144), (20, 192), (40, 96), (40, 200)])
def test_polar_noiseless_round_trip(K, E):
    rng = np.random.default_rng(K * 1000 + E)
    payload = bits(rng, 1000 if (K, E) in ((12, 40), (20, 64), (40, 200)) else 100, K)
    out, ok = polar_decode(20 * bipolar(uci_encode(payload, E)), K)
    assert np.all(ok)
    assert np.array_equal(out, payload)


def test_polar_sign_flip_fails_crc():
    rng = np.random.default_rng(3)
    payload = bits(rng, 100, 20)
    payload[payload.sum(axis=1) == 0, 0] = 1
    _, ok = polar_decode(-20 * bipolar(uci_encode(payload, 64)), 20)
    assert np.mean(ok) < 0.1


def test_list_size_helps():
    rng = np.random.default_rng(4)
    payload = bits(rng, 2000, 20)
    c = uci_encode(payload, 64)
    # Es/N0 = 0 dB on BPSK-like LLRs: y = x + n, noise var 1/2 per real dim
    y = bipolar(c) + rng.standard_normal(c.shape) * np.sqrt(0.5)
    llr = 4 * y
    err = {}
    for L in (1, 8):
        out, ok = polar_decode(llr, 20, L)
        err[L] = np.mean(~ok | np.any(out != payload, axis=1))
    assert err[8] <= err[1]


def test_bler_non_increasing_in_e():
    rng = np.random.default_rng(6)
    payload = bits(rng, 1000, 20)
    noise = rng.standard_normal((1000, 192)) * np.sqrt(0.5 / 10 ** (-1.5 / 10))
    rates = []
    for E in (48, 96, 192):
        c = uci_encode(payload, E)
        y = bipolar(c) + noise[:, :E]
        out, ok = polar_decode(4 * y * 10 ** (-1.5 / 10), 20)
        rates.append(np.mean(~ok | np.any(out != payload, axis=1)))
    assert rates[0] >= rates[1] >= rates[2]
    assert rates[0] > rates[2]


@pytest.mark.parametrize("K", range(3, 12))
def test_uci_small_block_round_trip(K):
    rng = np.random.default_rng(K)
    payload = bits(rng, 50, K)
    out, crc, metric = uci_decode(5 * bipolar(uci_encode(payload, 40)), K)
    assert crc is None
    assert np.array_equal(out, payload)
    assert np.all(metric > 0)
