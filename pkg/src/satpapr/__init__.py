"""OFDM PAPR reduction by special averaging of bizarre peaks, with NN and literature baselines."""

from .errors import InvalidInputError, UndefinedPaprError
from .metrics import CcdfCurve, QualityReport, ccdf_estimate, papr_db, quality_report
from .ofdm import OfdmConfig, demap_qam64, fft_unitary, ifft_unitary, map_qam64
from .sat import PeakSet, SatConfig, adaptive_threshold, detect_peaks, sat_process, sign_diff

__version__ = "0.1.0"

__all__ = [
    "CcdfCurve", "InvalidInputError", "OfdmConfig", "PeakSet", "QualityReport", "SatConfig",
    "UndefinedPaprError", "adaptive_threshold", "ccdf_estimate", "demap_qam64", "detect_peaks",
    "fft_unitary", "ifft_unitary", "map_qam64", "papr_db", "quality_report", "sat_process", "sign_diff",
]
