"""PAPR, CCDF, signal-quality figures and BER bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UndefinedPaprError

# Returned as SNR/PSNR when the test signal equals the reference exactly.
INFINITE_DB = math.inf
INFINITE_DB_TOKEN = "infinite"


def papr_db(time) -> np.ndarray | float:
    """10*log10(max|s|^2 / mean|s|^2) over the last axis.

    Pass only the useful part of a symbol; the cyclic prefix repeats samples.
    """
    p = np.abs(np.asarray(time, dtype=complex)) ** 2
    if p.shape[-1] == 0:
        raise InvalidInputError("empty signal")
    mean = p.mean(axis=-1)
    if np.any(mean == 0):
        raise UndefinedPaprError("PAPR is undefined for an all-zero signal")
    out = 10.0 * np.log10(p.max(axis=-1) / mean)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CcdfCurve:
    thresholds_db: np.ndarray
    probabilities: np.ndarray
    exceed_counts: np.ndarray
    n_samples: int

    def __post_init__(self):
        if np.any(np.diff(self.thresholds_db) <= 0):
            raise InvalidInputError("CCDF thresholds must be strictly increasing")

    @classmethod
    def from_counts(cls, thresholds_db, exceed_counts, n_samples: int) -> "CcdfCurve":
        counts = np.asarray(exceed_counts, dtype=np.int64)
        return cls(np.asarray(thresholds_db, dtype=float), counts / n_samples, counts, int(n_samples))

    def merge(self, other: "CcdfCurve") -> "CcdfCurve":
        """Combine two curves over the same grid by summing exceedance counts."""
        if not np.array_equal(self.thresholds_db, other.thresholds_db):
            raise InvalidInputError("cannot merge CCDF curves on different grids")
        return CcdfCurve.from_counts(self.thresholds_db, self.exceed_counts + other.exceed_counts,
                                     self.n_samples + other.n_samples)

    def threshold_at(self, probability: float) -> float:
        """Smallest grid threshold at which the CCDF is at or below ``probability``.

        Linear interpolation in dB between the bracketing grid points.
        """
        p = self.probabilities
        below = np.nonzero(p <= probability)[0]
        if below.size == 0:
            return float("nan")
        j = below[0]
        if j == 0:
            return float(self.thresholds_db[0])
        x0, x1 = self.thresholds_db[j - 1], self.thresholds_db[j]
        y0, y1 = p[j - 1], p[j]
        if y0 == y1:
            return float(x1)
        return float(x0 + (y0 - probability) * (x1 - x0) / (y0 - y1))


def exceed_counts(papr_samples, thresholds_db) -> np.ndarray:
    s = np.sort(np.asarray(papr_samples, dtype=float).ravel())
    t = np.asarray(thresholds_db, dtype=float)
    return (s.size - np.searchsorted(s, t, side="right")).astype(np.int64)


def ccdf_estimate(papr_samples, thresholds_db) -> CcdfCurve:
    """P(PAPR > threshold), strict inequality."""
    s = np.asarray(papr_samples, dtype=float).ravel()
    if s.size == 0:
        raise InvalidInputError("CCDF needs at least one PAPR sample")
    return CcdfCurve.from_counts(thresholds_db, exceed_counts(s, thresholds_db), s.size)


def gaussian_ccdf(thresholds_db, n: int) -> np.ndarray:
    """Closed-form CCDF 1-(1-exp(-g))^n for n independent complex-Gaussian samples."""
    g = 10.0 ** (np.asarray(thresholds_db, dtype=float) / 10.0)
    return -np.expm1(n * np.log1p(-np.exp(-g)))


def gaussian_papr_at(probability: float, n: int) -> float:
    """Inverse of :func:`gaussian_ccdf`."""
    g = -math.log(-math.expm1(math.log1p(-probability) / n))
    return 10.0 * math.log10(g)


@dataclass(frozen=True)
class QualityReport:
    mse: float
    snr_db: float
    psnr_db: float

    @property
    def lossless(self) -> bool:
        return self.mse == 0.0


def quality_report(reference, test) -> QualityReport:
    ref = np.asarray(reference)
    tst = np.asarray(test)
    if ref.shape != tst.shape:
        raise InvalidInputError(f"length mismatch: {ref.shape} vs {tst.shape}")
    err = np.abs(ref - tst) ** 2
    mse = float(err.mean())
    if mse == 0.0:
        return QualityReport(0.0, INFINITE_DB, INFINITE_DB)
    sig = np.abs(ref) ** 2
    snr = 10.0 * math.log10(float(sig.sum()) / float(err.sum())) if sig.sum() > 0 else -INFINITE_DB
    psnr = 10.0 * math.log10(float(sig.max()) / mse) if sig.max() > 0 else -INFINITE_DB
    return QualityReport(mse, snr, psnr)


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    bit_count: int
    error_count: int


@dataclass(frozen=True)
class BerCurve:
    points: tuple[BerPoint, ...]

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


def ber_count(sent_bits, received_bits) -> tuple[float, int, int]:
    """(ber, bit_count, error_count) from two equal-length bit streams."""
    a = np.asarray(sent_bits, dtype=np.uint8).ravel()
    b = np.asarray(received_bits, dtype=np.uint8).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise InvalidInputError("empty bit streams")
    errors = int(np.count_nonzero(a != b))
    return errors / a.size, a.size, errors


def _check_square_order(m: int) -> int:
    r = int(round(math.sqrt(m)))
    if m < 4 or m & (m - 1) or r * r != m:
        raise InvalidInputError(f"M must be a square power of two, got {m}")
    return r


def chernoff_union_bound_ser(snr_db, m: int = 64) -> np.ndarray:
    """Chernoff-bounded union bound on square M-QAM symbol error rate.

    ``snr_db`` is symbol energy over noise spectral density. Capped at 1.
    """
    root = _check_square_order(m)
    g = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    raw = 4.0 * (1.0 - 1.0 / root) * 0.5 * np.exp(-3.0 * g / (2.0 * (m - 1)))
    return np.minimum(1.0, raw)


def chernoff_union_bound_ber(snr_db, m: int = 64) -> np.ndarray:
    return chernoff_union_bound_ser(snr_db, m) / math.log2(m)


def _qfunc(x):
    from scipy.special import erfc

    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def qam_ser_awgn(snr_db, m: int = 64) -> np.ndarray:
    """Exact square M-QAM SER over AWGN (Es/N0 in dB)."""
    root = _check_square_order(m)
    g = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    p = 2.0 * (1.0 - 1.0 / root) * _qfunc(np.sqrt(3.0 * g / (m - 1)))
    return 1.0 - (1.0 - p) ** 2


def qam_ber_awgn_gray(snr_db, m: int = 64) -> np.ndarray:
    """Exact BER of Gray-coded square M-QAM over AWGN.

    Per-axis PAM bit error probability summed over bit positions
    (Cho & Yoon closed form); ``snr_db`` is Es/N0.
    """
    root = _check_square_order(m)
    k = int(math.log2(root))
    g = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    d = np.sqrt(3.0 * g / (m - 1))  # half-distance over per-axis noise std
    total = np.zeros_like(g)
    for bit in range(1, k + 1):
        span = int((1 - 2.0 ** -bit) * root)
        acc = np.zeros_like(g)
        for i in range(span):
            w = (-1) ** (i * 2 ** (bit - 1) // root) * (
                2 ** (bit - 1) - int(i * 2 ** (bit - 1) / root + 0.5))
            acc += w * 2.0 * _qfunc((2 * i + 1) * d)
        total += acc / root
    return total / k
