"""Literature PAPR reducers: clipping, selected mapping (SLM), partial transmit sequences (PTS)."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .metrics import papr_db
from .ofdm import ifft_oversampled

NO_CLIP = math.inf
QPSK_PHASES = (1, -1, 1j, -1j)


def clip(symbol, clip_ratio_db: float = 3.0) -> np.ndarray:
    """Limit magnitudes to rms * 10^(ratio/20), keeping phase.

    The rms is taken per symbol (last axis) before clipping.
    """
    x = np.asarray(symbol, dtype=complex)
    if clip_ratio_db == NO_CLIP:
        return x.copy()
    mag = np.abs(x)
    rms = np.sqrt(np.mean(mag ** 2, axis=-1, keepdims=True))
    level = rms * 10.0 ** (clip_ratio_db / 20.0)
    over = mag > level
    scale = np.where(over, level / np.where(over, mag, 1.0), 1.0)
    return x * scale


@dataclass(frozen=True)
class SlmConfig:
    u: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.u < 1:
            raise InvalidInputError(f"SLM needs u >= 1 candidates, got {self.u}")

    def phase_sequences(self, n: int) -> np.ndarray:
        """(u, n) table drawn from {+1, -1, +j, -j}; row 0 is all ones."""
        rng = np.random.default_rng([self.seed, n])
        table = np.asarray(QPSK_PHASES)[rng.integers(0, 4, size=(self.u, n))]
        table[0] = 1
        return table


def _argmin_papr(paprs: np.ndarray) -> np.ndarray:
    # np.argmin returns the first minimum, i.e. (PAPR, index) lexicographic order
    return np.argmin(paprs, axis=-1)


def slm_reduce(freq, cfg: SlmConfig = SlmConfig(), oversampling: int = 1):
    """Lowest-PAPR candidate among u phase-rotated copies.

    Works on one symbol ``(N,)`` or a batch ``(B, N)``; returns the chosen time
    symbols and candidate indices (the side information).
    """
    X = np.asarray(freq, dtype=complex)
    phases = cfg.phase_sequences(X.shape[-1])
    cands = ifft_oversampled(X[..., None, :] * phases, oversampling)
    best = _argmin_papr(papr_db(cands))
    chosen = np.take_along_axis(cands, np.asarray(best)[..., None, None], axis=-2)[..., 0, :]
    return chosen, best


PARTITIONS = ("contiguous", "interleaved")


@dataclass(frozen=True)
class PtsConfig:
    v: int = 4
    phase_set: tuple = QPSK_PHASES
    partition: str = "contiguous"

    def __post_init__(self):
        if self.v < 1:
            raise InvalidInputError(f"PTS needs v >= 1 sub-blocks, got {self.v}")
        if not self.phase_set or any(abs(abs(complex(p)) - 1) > 1e-12 for p in self.phase_set):
            raise InvalidInputError("phase_set must hold unit-magnitude factors")
        if self.partition not in PARTITIONS:
            raise InvalidInputError(f"partition must be one of {PARTITIONS}")

    def block_masks(self, n: int) -> np.ndarray:
        if n % self.v:
            raise InvalidInputError(f"N={n} is not divisible into {self.v} sub-blocks")
        owner = np.arange(n) // (n // self.v) if self.partition == "contiguous" else np.arange(n) % self.v
        return owner[None, :] == np.arange(self.v)[:, None]

    def phase_vectors(self) -> np.ndarray:
        """All (|set|^(v-1), v) combinations with the first block fixed to +1.

        Row 0 is the all-ones vector when +1 is in the set.
        """
        rest = list(itertools.product(self.phase_set, repeat=self.v - 1))
        vecs = np.array([(1,) + r for r in rest], dtype=complex)
        ones = np.all(vecs == 1, axis=1)
        if ones.any():
            vecs = np.concatenate([vecs[ones][:1], vecs[~ones]])
        else:
            vecs = np.concatenate([np.ones((1, self.v)), vecs])
        return vecs


def pts_reduce(freq, cfg: PtsConfig = PtsConfig(), oversampling: int = 1):
    """Exhaustive PTS search; returns (time symbols, chosen phase vectors)."""
    X = np.asarray(freq, dtype=complex)
    masks = cfg.block_masks(X.shape[-1])
    partial = ifft_oversampled(X[..., None, :] * masks, oversampling)  # (..., v, L)
    vecs = cfg.phase_vectors()  # (C, v)
    cands = np.einsum("cv,...vl->...cl", vecs, partial)
    # exact unmodified symbol for the identity vector, so PAPR can never rise
    cands[..., 0, :] = ifft_oversampled(X, oversampling)
    best = _argmin_papr(papr_db(cands))
    chosen = np.take_along_axis(cands, np.asarray(best)[..., None, None], axis=-2)[..., 0, :]
    return chosen, vecs[best]
