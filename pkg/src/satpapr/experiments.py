"""
Seeded Monte-Carlo experiments behind the CLI.

Every symbol's bits come from its own generator keyed by (seed, stream,
symbol index), and work is cut into fixed-size chunks, so results do not
depend on how many worker threads run the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import STREAM_BITS, STREAM_NOISE, awgn, rng_stream
from .errors import InvalidInputError
from .metrics import CcdfCurve, ccdf_estimate, papr_db, quality_report
from .nn import MlpModel, TrainConfig, TrainReport, train
from .ofdm import OfdmConfig, ifft_oversampled, map_qam64
from .sat import adaptive_threshold, sat_process_batch
from .techniques import ReducerSettings, reduce
from .wavelet import denoise

CHUNK = 256
OPERATING_PROBABILITY = 0.02
DEFAULT_THRESHOLDS = np.round(np.arange(0.0, 16.0 + 1e-9, 0.1), 10)


def symbol_bits(seed: int, indices, cfg: OfdmConfig) -> np.ndarray:
    return np.stack([rng_stream(seed, STREAM_BITS, i).integers(0, 2, cfg.bits_per_symbol, dtype=np.uint8)
                     for i in indices])


def freq_symbols(seed: int, indices, cfg: OfdmConfig) -> np.ndarray:
    return map_qam64(symbol_bits(seed, indices, cfg))


def _chunks(n: int, size: int = CHUNK):
    return [range(a, min(a + size, n)) for a in range(0, n, size)]


def _map_chunks(fn, n: int, threads: int):
    blocks = _chunks(n)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, blocks))
    return [fn(b) for b in blocks]


def papr_samples(techniques, n_symbols: int, seed: int, cfg: OfdmConfig = OfdmConfig(),
                 settings: ReducerSettings | None = None, threads: int = 1) -> dict[str, np.ndarray]:
    """PAPR of every symbol after each technique; all techniques see the same symbols."""
    if n_symbols < 1:
        raise InvalidInputError("need at least one symbol")
    settings = settings or ReducerSettings(oversampling=cfg.oversampling)

    def work(block):
        freq = freq_symbols(seed, block, cfg)
        return {t: np.atleast_1d(papr_db(reduce(t, freq, settings)[0])) for t in techniques}

    parts = _map_chunks(work, n_symbols, threads)
    return {t: np.concatenate([p[t] for p in parts]) for t in techniques}


def ccdf_sweep(techniques, n_symbols: int, seed: int, thresholds_db=DEFAULT_THRESHOLDS,
               cfg: OfdmConfig = OfdmConfig(), settings: ReducerSettings | None = None,
               threads: int = 1) -> tuple[dict[str, CcdfCurve], dict[str, np.ndarray]]:
    samples = papr_samples(techniques, n_symbols, seed, cfg, settings, threads)
    return {t: ccdf_estimate(s, thresholds_db) for t, s in samples.items()}, samples


def papr_at_probability(samples, probability: float = OPERATING_PROBABILITY) -> float:
    """PAPR level exceeded by a fraction ``probability`` of symbols (empirical quantile)."""
    s = np.asarray(samples, dtype=float)
    return float(np.quantile(s, 1.0 - probability, method="linear"))


@dataclass
class CompareRow:
    technique: str
    papr_db: float
    reduction_percent: float
    data_source: str = "synthetic"


def compare(techniques, n_symbols: int, seed: int, cfg: OfdmConfig = OfdmConfig(),
            settings: ReducerSettings | None = None, threads: int = 1,
            probability: float = OPERATING_PROBABILITY) -> list[CompareRow]:
    """Operating-point table; reduction is (conventional - x) / conventional * 100."""
    names = ["none"] + [t for t in techniques if t != "none"]
    samples = papr_samples(names, n_symbols, seed, cfg, settings, threads)
    conv = papr_at_probability(samples["none"], probability)
    rows = []
    for t in names:
        x = papr_at_probability(samples[t], probability)
        rows.append(CompareRow(t, x, (conv - x) / conv * 100.0))
    return rows


@dataclass
class KSweepRow:
    k: float
    mean_threshold_rel: float  # threshold over symbol rms, averaged
    mean_peaks: float
    papr_db_at_2pct: float


def k_sweep(ks, n_symbols: int, seed: int, cfg: OfdmConfig = OfdmConfig(),
            settings: ReducerSettings | None = None, threads: int = 1) -> list[KSweepRow]:
    settings = settings or ReducerSettings(oversampling=cfg.oversampling)
    rows = []
    for k in ks:
        sat_cfg = replace(settings.sat, k=float(k))

        def work(block, sat_cfg=sat_cfg):
            time = ifft_oversampled(freq_symbols(seed, block, cfg), cfg.oversampling)
            rms = np.sqrt(np.mean(np.abs(time) ** 2, axis=-1))
            out, mask, _ = sat_process_batch(time, sat_cfg)
            first = adaptive_threshold(np.abs(time), sat_cfg.k) / rms
            # peaks touched on the first pass
            _, first_mask, _ = sat_process_batch(time, replace(sat_cfg, max_passes=1))
            return papr_db(out), first, first_mask.sum(axis=-1)

        parts = _map_chunks(work, n_symbols, threads)
        paprs = np.concatenate([np.atleast_1d(p[0]) for p in parts])
        rows.append(KSweepRow(float(k), float(np.mean(np.concatenate([np.atleast_1d(p[1]) for p in parts]))),
                              float(np.mean(np.concatenate([np.atleast_1d(p[2]) for p in parts]))),
                              papr_at_probability(paprs)))
    return rows


@dataclass
class DenoiseRow:
    family: str
    level: int
    input_snr_db: float
    trials: int
    before: tuple  # (mse, snr_db, psnr_db) medians
    after: tuple


def denoise_eval(families, levels, input_snrs, trials: int, seed: int, cfg: OfdmConfig = OfdmConfig(),
                 rule: str = "soft", threads: int = 1) -> list[DenoiseRow]:
    """Noise-inject clean OFDM symbols, denoise, and report median quality figures.

    A noiseless input (SNR = inf) bypasses the denoiser: there is nothing to remove.
    """
    rows = []
    for fam in families:
        for lvl in levels:
            for j, snr in enumerate(input_snrs):
                def work(block, fam=fam, lvl=lvl, j=j, snr=snr):
                    clean = ifft_oversampled(freq_symbols(seed, block, cfg), cfg.oversampling)
                    out = []
                    for row, i in enumerate(block):
                        noisy = awgn(clean[row], snr, rng_stream(seed, STREAM_NOISE, i, j))
                        den = noisy if math.isinf(snr) else denoise(noisy, fam, lvl, rule)
                        b, a = quality_report(clean[row], noisy), quality_report(clean[row], den)
                        out.append((b.mse, b.snr_db, b.psnr_db, a.mse, a.snr_db, a.psnr_db))
                    return np.array(out)

                vals = np.concatenate(_map_chunks(work, trials, threads))
                med = np.median(vals, axis=0)
                rows.append(DenoiseRow(fam, int(lvl), float(snr), trials, tuple(med[:3]), tuple(med[3:])))
    return rows


def sat_training_set(n_symbols: int, seed: int, cfg: OfdmConfig = OfdmConfig(),
                     settings: ReducerSettings | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(raw envelope, SAT-processed envelope) pairs for NN imitation training."""
    settings = settings or ReducerSettings(oversampling=cfg.oversampling)
    time = ifft_oversampled(freq_symbols(seed, range(n_symbols), cfg), cfg.oversampling)
    out, _, _ = sat_process_batch(time, settings.sat)
    return np.abs(time), np.abs(out)


def train_nn(n_symbols: int, seed: int, train_cfg: TrainConfig = TrainConfig(),
             cfg: OfdmConfig = OfdmConfig(), settings: ReducerSettings | None = None
             ) -> tuple[MlpModel, TrainReport]:
    x, t = sat_training_set(n_symbols, seed, cfg, settings)
    return train(None, x, t, train_cfg)
