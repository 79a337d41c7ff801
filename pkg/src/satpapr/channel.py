"""AWGN / multipath Rayleigh channels and the end-to-end BER loop."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .metrics import BerCurve, BerPoint
from .ofdm import (OfdmConfig, add_cyclic_prefix, demap_qam64, fft_downsampled, map_qam64,
                   qam64_decide, remove_cyclic_prefix)
from .techniques import ReducerSettings, reduce

NOISELESS = math.inf
KINDS = ("awgn", "rayleigh_multipath")

# stream ids keep bits, noise and fading draws independent of each other
STREAM_BITS = 0
STREAM_NOISE = 1
STREAM_FADING = 2


def rng_stream(seed: int, stream_id: int, *index: int) -> np.random.Generator:
    """Generator for (seed, stream, index...); equal keys give equal sequences."""
    return np.random.default_rng([int(seed), int(stream_id), *map(int, index)])


def exponential_profile(n_taps: int = 4, decay_db: float = 3.0) -> np.ndarray:
    p = 10.0 ** (-decay_db * np.arange(n_taps) / 10.0)
    return p / p.sum()


@dataclass(frozen=True)
class ChannelConfig:
    kind: str = "awgn"
    snr_db: float = NOISELESS
    tap_powers: tuple = field(default_factory=lambda: tuple(exponential_profile()))
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"channel kind must be one of {KINDS}, got {self.kind!r}")
        p = np.asarray(self.tap_powers, dtype=float)
        if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidInputError("tap_powers must be non-empty, non-negative and sum to 1")


def complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    s = math.sqrt(variance / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def awgn(signal, snr_db: float, rng: np.random.Generator, signal_power: float | None = None) -> np.ndarray:
    """Add circular complex Gaussian noise at power ``signal_power / 10^(snr/10)``.

    ``signal_power`` defaults to the measured mean power of ``signal``.
    """
    x = np.asarray(signal, dtype=complex)
    if snr_db == NOISELESS:
        return x.copy()
    p = float(np.mean(np.abs(x) ** 2)) if signal_power is None else float(signal_power)
    if p <= 0:
        raise InvalidInputError("cannot set an SNR for a zero-power signal")
    return x + complex_noise(rng, x.shape, p / 10.0 ** (snr_db / 10.0))


def draw_taps(tap_powers, rng: np.random.Generator) -> np.ndarray:
    p = np.asarray(tap_powers, dtype=float)
    return complex_noise(rng, p.shape, 1.0) * np.sqrt(p)


def rayleigh_apply(symbol_with_cp, taps, rng: np.random.Generator | None = None,
                   prefix_len: int | None = None):
    """Pass one CP-extended symbol through a block-fading FIR channel.

    ``taps`` is either a power-delay profile (drawn fresh from ``rng``) or, when
    ``rng`` is None, an explicit complex tap realisation. Returns
    (received samples, tap realisation). The channel memory is checked
    against ``prefix_len`` when given.
    """
    x = np.asarray(symbol_with_cp, dtype=complex)
    h = np.asarray(taps, dtype=complex) if rng is None else draw_taps(taps, rng)
    if prefix_len is not None and prefix_len < h.size - 1:
        raise InvalidInputError(f"cyclic prefix ({prefix_len}) shorter than channel memory ({h.size - 1})")
    y = np.zeros_like(x)
    for lag, tap in enumerate(h):
        y[..., lag:] += tap * x[..., : x.shape[-1] - lag]
    return y, h


def channel_frequency_response(h, n: int) -> np.ndarray:
    """Per-bin gain seen by a unitary transform after CP removal."""
    return np.fft.fft(np.asarray(h, dtype=complex), n)


def _ber_chunk(technique, channel: ChannelConfig, snr_grid, indices, seed, cfg: OfdmConfig,
               settings: ReducerSettings):
    n = cfg.n_subcarriers
    bits = np.stack([rng_stream(seed, STREAM_BITS, i).integers(0, 2, cfg.bits_per_symbol, dtype=np.uint8)
                     for i in indices])
    freq = map_qam64(bits)
    tx, rotation = reduce(technique, freq, settings)
    tx_cp = add_cyclic_prefix(tx, cfg.guard_fraction)
    L = tx.shape[-1]
    if channel.kind == "rayleigh_multipath":
        rx_clean = np.empty_like(tx_cp)
        gains = np.empty((len(indices), L), dtype=complex)
        for row, i in enumerate(indices):
            rx_clean[row], h = rayleigh_apply(tx_cp[row], channel.tap_powers, rng_stream(seed, STREAM_FADING, i),
                                              prefix_len=cfg.prefix_len)
            gains[row] = channel_frequency_response(h, L)
    else:
        rx_clean, gains = tx_cp, None
    errors = np.zeros(len(snr_grid), dtype=np.int64)
    sym_errors = np.zeros(len(snr_grid), dtype=np.int64)
    per_symbol = np.zeros((len(snr_grid), len(indices)), dtype=np.int64)
    for j, snr in enumerate(snr_grid):
        if snr == NOISELESS:
            rx = rx_clean
        else:
            noise = np.stack([complex_noise(rng_stream(seed, STREAM_NOISE, i, j), rx_clean.shape[-1],
                                            10.0 ** (-snr / 10.0)) for i in indices])
            rx = rx_clean + noise
        y = remove_cyclic_prefix(rx, cfg.guard_fraction)
        if gains is not None:
            y = np.fft.ifft(np.fft.fft(y, axis=-1) / gains, axis=-1)
        est = fft_downsampled(y, cfg.oversampling)
        if rotation is not None:
            est = est / rotation
        got = demap_qam64(est)
        wrong = got != bits
        per_symbol[j] = wrong.sum(axis=-1)
        errors[j] = per_symbol[j].sum()
        sym_errors[j] = np.count_nonzero(qam64_decide(est) != freq)
    return errors, sym_errors, per_symbol


@dataclass
class BerResult:
    curve: BerCurve
    symbol_errors: np.ndarray
    symbols_sent: int
    per_symbol_errors: np.ndarray  # (snr, symbol) bit-error counts

    @property
    def ser(self) -> np.ndarray:
        return self.symbol_errors / self.symbols_sent


def run_ber(technique: str, channel: ChannelConfig, snr_grid, n_symbols: int, seed: int,
            cfg: OfdmConfig = OfdmConfig(), settings: ReducerSettings | None = None,
            threads: int = 1, chunk: int = 64) -> BerResult:
    """Full link per symbol: bits, QAM, IFFT, reducer, CP, channel, ZF, FFT, demap.

    SNR is symbol energy over noise density per subcarrier (noise variance
    10^(-snr/10) against the unit nominal sample power). Every random draw
    is keyed by symbol index, so the result does not depend on ``threads``.
    """
    if n_symbols < 1:
        raise InvalidInputError("n_symbols must be >= 1")
    settings = settings or ReducerSettings(oversampling=cfg.oversampling)
    snrs = [float(s) for s in snr_grid]
    blocks = [range(a, min(a + chunk, n_symbols)) for a in range(0, n_symbols, chunk)]

    def work(block):
        return _ber_chunk(technique, channel, snrs, list(block), seed, cfg, settings)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    errors = sum(p[0] for p in parts)
    sym_errors = sum(p[1] for p in parts)
    per_symbol = np.concatenate([p[2] for p in parts], axis=1)
    bit_count = n_symbols * cfg.bits_per_symbol
    points = tuple(BerPoint(s, int(e) / bit_count, bit_count, int(e)) for s, e in zip(snrs, errors))
    return BerResult(BerCurve(points), sym_errors, n_symbols * cfg.n_subcarriers, per_symbol)
