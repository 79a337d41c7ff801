"""
OFDM modem: 64-QAM Gray mapping, unitary transforms and cyclic prefix.

Time and frequency symbols are plain complex numpy arrays. Every function
accepts a single symbol ``(N,)`` or a batch ``(..., N)`` along the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError

BITS_PER_SYMBOL = 6
QAM64_SCALE = np.sqrt(42.0)

# Per-axis Gray code: 3-bit word (MSB first) -> PAM level.
_GRAY_8PAM = {
    (0, 0, 0): -7, (0, 0, 1): -5, (0, 1, 1): -3, (0, 1, 0): -1,
    (1, 1, 0): 1, (1, 1, 1): 3, (1, 0, 1): 5, (1, 0, 0): 7,
}
_LEVEL_OF_WORD = np.zeros(8, dtype=float)
for _bits, _lvl in _GRAY_8PAM.items():
    _LEVEL_OF_WORD[_bits[0] * 4 + _bits[1] * 2 + _bits[2]] = _lvl
# index (level+7)//2 -> 3-bit word
_WORD_OF_INDEX = np.array([4 * b[0] + 2 * b[1] + b[2] for b, _ in
                           sorted(_GRAY_8PAM.items(), key=lambda kv: kv[1])], dtype=np.uint8)


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int = 512
    guard_fraction: Fraction = Fraction(1, 4)
    modulation_order: int = 64
    oversampling: int = 1

    def __post_init__(self):
        object.__setattr__(self, "guard_fraction", Fraction(self.guard_fraction).limit_denominator(1 << 20))
        if not _is_pow2(self.n_subcarriers):
            raise InvalidInputError(f"n_subcarriers must be a power of two, got {self.n_subcarriers}")
        if (self.guard_fraction * self.n_subcarriers).denominator != 1 or self.guard_fraction < 0:
            raise InvalidInputError(f"guard_fraction*N must be a non-negative integer, got {self.guard_fraction}")
        m = self.modulation_order
        if not (_is_pow2(m) and int(round(np.sqrt(m))) ** 2 == m and m >= 4):
            raise InvalidInputError(f"modulation order must be a square power of two, got {m}")
        if self.modulation_order != 64:
            raise InvalidInputError("only 64-QAM is implemented")
        if not _is_pow2(self.oversampling):
            raise InvalidInputError(f"oversampling must be a power of two, got {self.oversampling}")

    @property
    def prefix_len(self) -> int:
        return int(self.guard_fraction * self.n_subcarriers * self.oversampling)

    @property
    def bits_per_symbol(self) -> int:
        return self.n_subcarriers * BITS_PER_SYMBOL


def qam64_constellation() -> np.ndarray:
    """All 64 points, indexed by the integer value of their 6-bit codeword."""
    words = np.arange(64)
    return (_LEVEL_OF_WORD[words >> 3] + 1j * _LEVEL_OF_WORD[words & 7]) / QAM64_SCALE


def map_qam64(bits) -> np.ndarray:
    """Map a bit stream (first 3 bits of each group -> I, last 3 -> Q) to unit-energy 64-QAM."""
    b = np.asarray(bits, dtype=np.uint8)
    if b.shape[-1] % BITS_PER_SYMBOL:
        raise InvalidInputError(f"bit count {b.shape[-1]} is not divisible by 6")
    g = b.reshape(*b.shape[:-1], -1, BITS_PER_SYMBOL)
    i_word = 4 * g[..., 0] + 2 * g[..., 1] + g[..., 2]
    q_word = 4 * g[..., 3] + 2 * g[..., 4] + g[..., 5]
    return (_LEVEL_OF_WORD[i_word] + 1j * _LEVEL_OF_WORD[q_word]) / QAM64_SCALE


def _slice_axis(v: np.ndarray) -> np.ndarray:
    # nearest odd level in [-7, 7] -> index 0..7
    idx = np.floor((v * QAM64_SCALE + 8.0) / 2.0)
    return np.clip(idx, 0, 7).astype(np.intp)


def demap_qam64(points) -> np.ndarray:
    """Hard per-axis minimum-distance decision back to bits."""
    p = np.asarray(points, dtype=complex)
    i_word = _WORD_OF_INDEX[_slice_axis(p.real)]
    q_word = _WORD_OF_INDEX[_slice_axis(p.imag)]
    out = np.empty(p.shape + (BITS_PER_SYMBOL,), dtype=np.uint8)
    for j in range(3):
        out[..., j] = (i_word >> (2 - j)) & 1
        out[..., 3 + j] = (q_word >> (2 - j)) & 1
    return out.reshape(*p.shape[:-1], -1) if p.ndim else out


def qam64_decide(points) -> np.ndarray:
    """Nearest constellation point for each input (used for SER counting)."""
    p = np.asarray(points, dtype=complex)
    lv = 2.0 * np.arange(8) - 7.0
    return (lv[_slice_axis(p.real)] + 1j * lv[_slice_axis(p.imag)]) / QAM64_SCALE


def _check_len(n: int) -> None:
    if not _is_pow2(n):
        raise InvalidInputError(f"transform length must be a power of two, got {n}")


def ifft_unitary(freq) -> np.ndarray:
    x = np.asarray(freq, dtype=complex)
    _check_len(x.shape[-1])
    return np.fft.ifft(x, norm="ortho")


def fft_unitary(time) -> np.ndarray:
    x = np.asarray(time, dtype=complex)
    _check_len(x.shape[-1])
    return np.fft.fft(x, norm="ortho")


def ifft_oversampled(freq, factor: int = 1) -> np.ndarray:
    """Zero-padded inverse transform, scaled so average power is preserved.

    The spectrum is split at N/2 and zeros are inserted in the middle
    (standard trigonometric interpolation).
    """
    x = np.asarray(freq, dtype=complex)
    n = x.shape[-1]
    _check_len(n)
    if factor == 1:
        return ifft_unitary(x)
    if not _is_pow2(factor):
        raise InvalidInputError(f"oversampling factor must be a power of two, got {factor}")
    padded = np.zeros(x.shape[:-1] + (n * factor,), dtype=complex)
    padded[..., : n // 2] = x[..., : n // 2]
    padded[..., -n // 2:] = x[..., n // 2:]
    return np.fft.ifft(padded, norm="ortho") * np.sqrt(factor)


def fft_downsampled(time, factor: int = 1) -> np.ndarray:
    """Inverse of :func:`ifft_oversampled`."""
    x = np.asarray(time, dtype=complex)
    if factor == 1:
        return fft_unitary(x)
    n = x.shape[-1] // factor
    spec = np.fft.fft(x, norm="ortho") / np.sqrt(factor)
    return np.concatenate([spec[..., : n // 2], spec[..., -n // 2:]], axis=-1)


def _prefix_len(n: int, guard_fraction) -> int:
    cp = Fraction(guard_fraction) * n
    if cp.denominator != 1 or cp < 0:
        raise InvalidInputError(f"guard fraction {guard_fraction} gives a non-integral prefix for N={n}")
    return int(cp)


def add_cyclic_prefix(time, guard_fraction) -> np.ndarray:
    x = np.asarray(time)
    cp = _prefix_len(x.shape[-1], guard_fraction)
    if cp == 0:
        return x.copy()
    return np.concatenate([x[..., -cp:], x], axis=-1)


def remove_cyclic_prefix(time, guard_fraction) -> np.ndarray:
    """Strip the prefix; ``time`` has length N*(1+guard_fraction)."""
    x = np.asarray(time)
    total = x.shape[-1]
    n = Fraction(total) / (1 + Fraction(guard_fraction))
    if n.denominator != 1:
        raise InvalidInputError(f"length {total} is inconsistent with guard fraction {guard_fraction}")
    cp = _prefix_len(int(n), guard_fraction)
    return x[..., cp:].copy()


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def modulate(bits, cfg: OfdmConfig = OfdmConfig()) -> tuple[np.ndarray, np.ndarray]:
    """bits -> (freq points, useful time samples) for one or more fully loaded symbols."""
    freq = map_qam64(bits)
    if freq.shape[-1] % cfg.n_subcarriers:
        raise InvalidInputError("bit count must fill an integer number of OFDM symbols")
    freq = freq.reshape(*freq.shape[:-1], -1, cfg.n_subcarriers)
    return freq, ifft_oversampled(freq, cfg.oversampling)
