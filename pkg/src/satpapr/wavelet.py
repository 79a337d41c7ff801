"""
Orthonormal periodic DWT (Haar, Daubechies-4) and universal-threshold denoising.

``db4`` here is the 4-tap Daubechies filter (two vanishing moments).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .metrics import QualityReport, quality_report

_S3 = math.sqrt(3.0)
_LOWPASS = {
    "haar": np.array([1.0, 1.0]) / math.sqrt(2.0),
    "db4": np.array([1 + _S3, 3 + _S3, 3 - _S3, 1 - _S3]) / (4.0 * math.sqrt(2.0)),
}


@dataclass(frozen=True)
class WaveletFamily:
    name: str
    lowpass: np.ndarray
    highpass: np.ndarray

    @classmethod
    def get(cls, name: str) -> "WaveletFamily":
        try:
            h = _LOWPASS[name]
        except KeyError:
            raise InvalidInputError(f"unknown wavelet family {name!r}; choose from {sorted(_LOWPASS)}") from None
        # quadrature mirror: g[k] = (-1)^k h[L-1-k]
        g = h[::-1] * (-1.0) ** np.arange(h.size)
        return cls(name, h, g)


FAMILIES = tuple(_LOWPASS)


def _family(f) -> WaveletFamily:
    return f if isinstance(f, WaveletFamily) else WaveletFamily.get(f)


@dataclass
class DwtCoefficients:
    approx: np.ndarray
    details: list  # finest level first
    levels: int


def _analysis(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    # y[n] = sum_k f[k] x[(2n + k) mod len]
    n = x.shape[-1]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(filt.size)[None, :]) % n
    return x[..., idx] @ filt


def _synthesis(a: np.ndarray, d: np.ndarray, fam: WaveletFamily) -> np.ndarray:
    half = a.shape[-1]
    n = 2 * half
    out = np.zeros(a.shape[:-1] + (n,))
    for k in range(fam.lowpass.size):
        pos = (2 * np.arange(half) + k) % n
        np.add.at(out, (..., pos), fam.lowpass[k] * a + fam.highpass[k] * d)
    return out


def _check(n: int, levels: int) -> None:
    if n < 2 or n & (n - 1):
        raise InvalidInputError(f"signal length must be a power of two >= 2, got {n}")
    if levels < 1 or (1 << levels) > n:
        raise InvalidInputError(f"levels must be in 1..log2({n}), got {levels}")


def dwt(signal, family="haar", levels: int = 3) -> DwtCoefficients:
    x = np.asarray(signal, dtype=float)
    _check(x.shape[-1], levels)
    fam = _family(family)
    details = []
    a = x
    for _ in range(levels):
        details.append(_analysis(a, fam.highpass))
        a = _analysis(a, fam.lowpass)
    return DwtCoefficients(a, details, levels)


def idwt(coeffs: DwtCoefficients, family="haar") -> np.ndarray:
    fam = _family(family)
    a = coeffs.approx
    for d in reversed(coeffs.details):
        a = _synthesis(a, d, fam)
    return a


def soft_threshold(c: np.ndarray, t) -> np.ndarray:
    return np.sign(c) * np.maximum(np.abs(c) - t, 0.0)


def hard_threshold(c: np.ndarray, t) -> np.ndarray:
    return np.where(np.abs(c) > t, c, 0.0)


def universal_threshold(coeffs: DwtCoefficients, n: int) -> float:
    """MAD noise estimate from the finest detail band times sqrt(2 ln n)."""
    sigma = float(np.median(np.abs(coeffs.details[0]))) / 0.6745
    return sigma * math.sqrt(2.0 * math.log(n))


def _denoise_real(x: np.ndarray, fam, levels: int, rule: str, threshold) -> np.ndarray:
    c = dwt(x, fam, levels)
    t = universal_threshold(c, x.size) if threshold is None else threshold
    if t == 0.0:
        return x.copy()
    shrink = soft_threshold if rule == "soft" else hard_threshold
    c.details = [shrink(d, t) for d in c.details]
    return idwt(c, fam)


def denoise(noisy, family="haar", levels: int = 3, rule: str = "soft", threshold: float | None = None):
    """Threshold all detail bands; the approximation band is left alone.

    Complex input is denoised as two independent real channels, each with its
    own noise estimate. ``threshold`` overrides the universal threshold.
    """
    if rule not in ("soft", "hard"):
        raise InvalidInputError(f"rule must be 'soft' or 'hard', got {rule!r}")
    x = np.asarray(noisy)
    fam = _family(family)
    _check(x.shape[-1], levels)
    if np.iscomplexobj(x):
        return (_denoise_real(x.real.astype(float), fam, levels, rule, threshold)
                + 1j * _denoise_real(x.imag.astype(float), fam, levels, rule, threshold))
    return _denoise_real(x.astype(float), fam, levels, rule, threshold)


def denoise_report(clean, noisy, denoised) -> tuple[QualityReport, QualityReport]:
    """Quality of the noisy and of the denoised signal, both measured against ``clean``."""
    return quality_report(clean, noisy), quality_report(clean, denoised)
