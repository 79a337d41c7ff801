"""Uniform dispatch over the PAPR reducers used by the experiment loops."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import PtsConfig, SlmConfig, clip, pts_reduce, slm_reduce
from .errors import InvalidInputError
from .nn import MlpModel, load_model, nn_reduce
from .ofdm import ifft_oversampled
from .sat import SatConfig, sat_process_batch

TECHNIQUES = ("none", "sat", "clip", "slm", "pts", "nn")


@dataclass
class ReducerSettings:
    sat: SatConfig = field(default_factory=SatConfig)
    slm: SlmConfig = field(default_factory=SlmConfig)
    pts: PtsConfig = field(default_factory=PtsConfig)
    clip_ratio_db: float = 3.0
    model_path: str | None = None
    model: MlpModel | None = None
    oversampling: int = 1

    def nn_model(self) -> MlpModel:
        if self.model is None:
            if not self.model_path:
                raise InvalidInputError("technique 'nn' needs a trained model (model_path)")
            self.model = load_model(self.model_path)
        return self.model


def parse_techniques(names_or_text) -> list[str]:
    names = [t.strip() for t in names_or_text.split(",")] if isinstance(names_or_text, str) else list(names_or_text)
    names = [t for t in names if t]
    bad = [t for t in names if t not in TECHNIQUES]
    if bad or not names:
        raise InvalidInputError(f"unknown technique(s) {bad}; choose from {TECHNIQUES}")
    return names


def reduce(technique: str, freq: np.ndarray, settings: ReducerSettings):
    """Transmit-side time symbols for a batch of frequency symbols.

    Returns (time, freq_rotation) where ``freq_rotation`` is the per-subcarrier
    factor an ideal receiver divides out (SLM/PTS side information), or None.
    """
    time = ifft_oversampled(freq, settings.oversampling)
    if technique == "none":
        return time, None
    if technique == "sat":
        return sat_process_batch(time, settings.sat)[0], None
    if technique == "clip":
        return clip(time, settings.clip_ratio_db), None
    if technique == "slm":
        out, idx = slm_reduce(freq, settings.slm, settings.oversampling)
        return out, settings.slm.phase_sequences(freq.shape[-1])[idx]
    if technique == "pts":
        out, vecs = pts_reduce(freq, settings.pts, settings.oversampling)
        masks = settings.pts.block_masks(freq.shape[-1]).astype(complex)
        return out, vecs @ masks
    if technique == "nn":
        return nn_reduce(settings.nn_model(), time), None
    raise InvalidInputError(f"unknown technique {technique!r}")
