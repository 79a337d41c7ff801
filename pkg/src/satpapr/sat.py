"""
Special averaging technique: find bizarre peaks in the envelope and
replace them with a local average.

Detection runs in three steps on the magnitude series: sign of the first
difference, template match of the sign series against the [-1, 1] kernel
(a full convolution output of exactly 2 marks an up-then-down pair), and an
adaptive threshold built from the envelope's descriptive statistics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

FILTERS = ("simple", "exponential", "weighted")
BOUNDARIES = ("cyclic", "clamp")
PEAK_KERNEL = np.array([-1, 1])
MATCH_VALUE = 2


@dataclass(frozen=True)
class SatConfig:
    k: float = 2.5
    filter: str = "simple"
    boundary: str = "cyclic"
    max_passes: int = 1
    alpha: float = 0.5  # exponential-AF weight on the previous sample

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidInputError(f"k must be positive, got {self.k}")
        if self.filter not in FILTERS:
            raise InvalidInputError(f"filter must be one of {FILTERS}, got {self.filter!r}")
        if self.boundary not in BOUNDARIES:
            raise InvalidInputError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.max_passes < 1:
            raise InvalidInputError(f"max_passes must be >= 1, got {self.max_passes}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass
class PeakSet:
    indices: np.ndarray
    threshold: float
    passes: int = 1
    per_pass: list = field(default_factory=list)


def sign_diff(mag) -> np.ndarray:
    m = np.asarray(mag, dtype=float)
    if m.shape[-1] < 2:
        raise InvalidInputError("need at least two samples to take differences")
    return np.sign(np.diff(m, axis=-1)).astype(np.int8)


def template_match(signs) -> np.ndarray:
    """Full discrete convolution of each sign series with the [-1, 1] kernel.

    Output index j equals signs[j-1] - signs[j] (missing ends count as 0).
    """
    s = np.asarray(signs, dtype=np.int16)
    if s.ndim == 1:
        return np.convolve(s, PEAK_KERNEL)
    padded = np.concatenate([np.zeros(s.shape[:-1] + (1,), s.dtype), s,
                             np.zeros(s.shape[:-1] + (1,), s.dtype)], axis=-1)
    return padded[..., :-1] - padded[..., 1:]


def detect_peaks(signs) -> np.ndarray:
    """Magnitude indices where the template response equals 2.

    Only interior outputs (1..len(signs)-1) can mark a peak: at the ends one
    operand of the pair is missing, so the response never reaches 2 there.
    Returns a sorted index array for a single series, or a boolean mask of
    shape (..., len(signs)+1) for a batch.
    """
    conv = template_match(signs)
    hit = conv == MATCH_VALUE
    if conv.ndim == 1:
        return np.flatnonzero(hit)
    return hit


def adaptive_threshold(mag, k: float) -> np.ndarray | float:
    """(max + mean + population std) / k over the last axis."""
    m = np.asarray(mag, dtype=float)
    if m.shape[-1] == 0:
        raise InvalidInputError("empty magnitude series")
    if not k > 0:
        raise InvalidInputError(f"k must be positive, got {k}")
    t = (m.max(axis=-1) + m.mean(axis=-1) + m.std(axis=-1)) / k
    return float(t) if np.ndim(t) == 0 else t


def _neighbours(x: np.ndarray, boundary: str) -> tuple[np.ndarray, np.ndarray]:
    if boundary == "cyclic":
        return np.roll(x, 1, axis=-1), np.roll(x, -1, axis=-1)
    prev = np.concatenate([x[..., :1], x[..., :-1]], axis=-1)
    nxt = np.concatenate([x[..., 1:], x[..., -1:]], axis=-1)
    return prev, nxt


def averaged(x: np.ndarray, cfg: SatConfig) -> np.ndarray:
    """Replacement value for every position; callers pick the peak positions."""
    prev, nxt = _neighbours(x, cfg.boundary)
    if cfg.filter == "simple":
        return (prev + x + nxt) / 3.0
    if cfg.filter == "weighted":
        return (prev + 2.0 * x + nxt) / 4.0
    return cfg.alpha * prev + (1.0 - cfg.alpha) * x


def _peak_mask(x: np.ndarray, k: float) -> tuple[np.ndarray, np.ndarray]:
    mag = np.abs(x)
    thresh = adaptive_threshold(mag, k)
    mask = np.asarray(detect_peaks(sign_diff(mag[None]))) if mag.ndim == 1 else detect_peaks(sign_diff(mag))
    if mag.ndim == 1:
        mask = mask[0]
    mask &= mag > np.asarray(thresh)[..., None]
    return mask, np.asarray(thresh)


def sat_process_batch(symbols, cfg: SatConfig = SatConfig()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised SAT over rows of ``symbols``.

    Returns (processed, final peak mask, final threshold per row).
    """
    x = np.array(symbols, dtype=complex, copy=True)
    mask, thresh = _peak_mask(x, cfg.k)
    for p in range(cfg.max_passes):
        if not mask.any():
            break
        # all replacements of a pass read the pass input, never each other
        x = np.where(mask, averaged(x, cfg), x)
        if p + 1 < cfg.max_passes:
            mask, thresh = _peak_mask(x, cfg.k)
    return x, mask, thresh


def sat_process(symbol, cfg: SatConfig = SatConfig()) -> tuple[np.ndarray, PeakSet]:
    """Detect, threshold and average out the bizarre peaks of one symbol.

    With ``max_passes > 1`` the statistics are recomputed after every pass
    and processing stops early once no peak clears the threshold.
    """
    x = np.array(symbol, dtype=complex, copy=True)
    if x.ndim != 1:
        raise InvalidInputError("sat_process takes a single symbol; use sat_process_batch")
    history = []
    passes = 0
    mask, thresh = _peak_mask(x, cfg.k)
    peaks = PeakSet(np.flatnonzero(mask), float(thresh))
    while passes < cfg.max_passes and mask.any():
        passes += 1
        history.append(np.flatnonzero(mask))
        x = np.where(mask, averaged(x, cfg), x)
        peaks = PeakSet(np.flatnonzero(mask), float(thresh))
        if passes < cfg.max_passes:
            mask, thresh = _peak_mask(x, cfg.k)
    peaks.passes = passes
    peaks.per_pass = history
    return x, peaks
