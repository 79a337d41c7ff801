import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satpapr.errors import InvalidInputError, UndefinedPaprError
from satpapr.metrics import (INFINITE_DB, CcdfCurve, ber_count, ccdf_estimate, chernoff_union_bound_ber,
                             chernoff_union_bound_ser, gaussian_ccdf, gaussian_papr_at, papr_db,
                             qam_ber_awgn_gray, qam_ser_awgn, quality_report)
from satpapr.ofdm import ifft_unitary, map_qam64, qam64_decide


def test_constant_envelope_is_zero_db():
    f = np.zeros(512, complex)
    f[17] = 1
    assert papr_db(ifft_unitary(f)) == pytest.approx(0.0, abs=1e-9)


def test_impulse_papr():
    assert papr_db(ifft_unitary(np.full(512, 1 + 1j))) == pytest.approx(10 * math.log10(512), abs=1e-9)
    assert 10 * math.log10(512) == pytest.approx(27.093, abs=1e-3)


def test_papr_arithmetic():
    assert papr_db(np.array([1, 1, 1, 3.0])) == pytest.approx(10 * math.log10(3), abs=1e-12)
    assert papr_db(np.array([1, 1, 1, 3.0])) == pytest.approx(4.771, abs=1e-3)


def test_papr_batch_axis(rng):
    x = rng.normal(size=(5, 32)) + 1j * rng.normal(size=(5, 32))
    assert np.allclose(papr_db(x), [papr_db(r) for r in x])


def test_zero_signal_papr_undefined():
    with pytest.raises(UndefinedPaprError):
        papr_db(np.zeros(8))


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.integers(0, 10**6))
def test_papr_scale_invariant(re, im, seed):
    c = complex(re, im)
    if abs(c) < 1e-6:
        return
    x = np.random.default_rng(seed).normal(size=64) + 1j
    assert papr_db(c * x) == pytest.approx(papr_db(x), abs=1e-9)


def test_ccdf_single_sample():
    c = ccdf_estimate([5.0], [4.0, 6.0])
    assert c.probabilities.tolist() == [1.0, 0.0]


def test_ccdf_strict_inequality():
    assert ccdf_estimate([5.0], [5.0]).probabilities[0] == 0.0


def test_ccdf_empty_rejected():
    with pytest.raises(InvalidInputError):
        ccdf_estimate([], [1.0])


def test_ccdf_thresholds_must_increase():
    with pytest.raises(InvalidInputError):
        ccdf_estimate([1.0], [2.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 20), min_size=1, max_size=200), st.lists(st.floats(0, 20), min_size=1, max_size=200))
def test_ccdf_monotone_and_mixture_between(a, b):
    grid = np.linspace(0, 20, 81)
    ca, cb = ccdf_estimate(a, grid), ccdf_estimate(b, grid)
    cab = ccdf_estimate(a + b, grid)
    assert np.all(np.diff(ca.probabilities) <= 0)
    lo = np.minimum(ca.probabilities, cb.probabilities)
    hi = np.maximum(ca.probabilities, cb.probabilities)
    assert np.all(cab.probabilities >= lo - 1e-12) and np.all(cab.probabilities <= hi + 1e-12)
    merged = ca.merge(cb)
    assert np.array_equal(merged.exceed_counts, cab.exceed_counts)


def test_ccdf_brute_force(rng):
    s = rng.normal(8, 2, 500)
    grid = np.linspace(0, 16, 33)
    c = ccdf_estimate(s, grid)
    assert np.allclose(c.probabilities, [(s > g).mean() for g in grid])


def test_gaussian_oracle_inverse():
    g = gaussian_papr_at(1e-2, 512)
    assert gaussian_ccdf([g], 512)[0] == pytest.approx(1e-2, rel=1e-9)
    assert 10.3 <= g <= 10.4


def test_threshold_at_interpolates():
    c = CcdfCurve.from_counts([0.0, 1.0, 2.0], [100, 50, 0], 100)
    assert c.threshold_at(0.5) == pytest.approx(1.0)
    assert c.threshold_at(0.25) == pytest.approx(1.5)


def test_quality_identical():
    x = np.arange(1, 9) + 0j
    r = quality_report(x, x)
    assert r.mse == 0 and r.snr_db == INFINITE_DB and r.psnr_db == INFINITE_DB and r.lossless


def test_quality_snr_20db(rng):
    ref = rng.normal(size=256) + 1j * rng.normal(size=256)
    r = quality_report(ref, ref + ref / 10)
    assert r.snr_db == pytest.approx(20.0, abs=1e-9)
    assert r.mse == pytest.approx(np.mean(np.abs(ref) ** 2) / 100)


def test_quality_psnr_not_below_snr(rng):
    for _ in range(50):
        ref = rng.normal(size=64) + 1j * rng.normal(size=64)
        r = quality_report(ref, ref + 0.3 * rng.normal(size=64))
        assert r.psnr_db >= r.snr_db


def test_quality_length_mismatch():
    with pytest.raises(InvalidInputError):
        quality_report(np.ones(4), np.ones(5))


def test_ber_count_cases(rng):
    b = rng.integers(0, 2, 1000).astype(np.uint8)
    assert ber_count(b, b)[0] == 0.0
    assert ber_count(b, 1 - b)[0] == 1.0
    c = b.copy()
    c[123] ^= 1
    assert ber_count(b, c) == (0.001, 1000, 1)
    with pytest.raises(InvalidInputError):
        ber_count(b, b[:-1])
    with pytest.raises(InvalidInputError):
        ber_count([], [])


def test_chernoff_cap_and_monotone():
    # M=4 at 0 dB: raw expression exp(-1/2) stays below the cap
    assert chernoff_union_bound_ser([0.0], 4)[0] == pytest.approx(math.exp(-0.5))
    # 64-QAM raw prefactor is 1.75, so low SNR hits the cap
    assert chernoff_union_bound_ser([-20.0, 0.0], 64).tolist() == [1.0, 1.0]
    grid = np.linspace(-10, 40, 201)
    assert np.all(np.diff(chernoff_union_bound_ber(grid, 64)) <= 0)
    assert np.allclose(chernoff_union_bound_ber(grid, 64), chernoff_union_bound_ser(grid, 64) / 6)
    with pytest.raises(InvalidInputError):
        chernoff_union_bound_ber([0.0], 32)


def test_chernoff_dominates_simulated_ser(rng):
    # 64-QAM over AWGN, 10^6 symbols per point
    for snr in (6.0, 12.0, 18.0, 22.0):
        bits = rng.integers(0, 2, 6 * 10**6).astype(np.uint8)
        x = map_qam64(bits)
        s = math.sqrt(10 ** (-snr / 10) / 2)
        y = x + s * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
        ser = np.mean(qam64_decide(y) != x)
        assert chernoff_union_bound_ser(snr, 64) >= ser
        assert ser == pytest.approx(qam_ser_awgn(snr, 64), rel=0.05, abs=1e-5)


def test_gray_ber_formula_matches_simulation(rng):
    # the closed form used as the BER-chain oracle, checked once against brute force
    bits = rng.integers(0, 2, 6 * 400_000).astype(np.uint8)
    x = map_qam64(bits)
    from satpapr.ofdm import demap_qam64
    for snr in (10.0, 18.0):
        s = math.sqrt(10 ** (-snr / 10) / 2)
        y = x + s * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
        assert np.mean(demap_qam64(y) != bits) == pytest.approx(qam_ber_awgn_gray(snr), rel=0.02)


def test_gray_ber_qpsk_reduces_to_q_function():
    from scipy.special import erfc
    g = 10 ** (np.array([0.0, 6.0, 10.0]) / 10)
    assert np.allclose(qam_ber_awgn_gray([0.0, 6.0, 10.0], 4), 0.5 * erfc(np.sqrt(g / 2)))
