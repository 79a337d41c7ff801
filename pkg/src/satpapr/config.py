"""
Experiment configuration: a JSON file whose keys mirror the CLI flags.

Example::

    {
      "seed": 7, "trials": 100000, "threads": 4,
      "techniques": ["none", "sat", "clip", "slm", "pts"],
      "ofdm": {"n_subcarriers": 512, "guard_fraction": "1/4", "oversampling": 1},
      "sat": {"k": 2.5, "filter": "simple", "boundary": "cyclic", "max_passes": 1},
      "slm": {"u": 16, "seed": 0},
      "pts": {"v": 4, "partition": "contiguous"},
      "clip_ratio_db": 3.0,
      "channel": {"kind": "awgn", "tap_powers": [0.57, 0.29, 0.14]},
      "snr_db": [0, 4, 8, 12, 16, 20],
      "train": {"learning_rate": 0.1, "goal_mse": 0.001, "max_epochs": 25000}
    }
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .baselines import PtsConfig, SlmConfig
from .channel import ChannelConfig
from .errors import InvalidInputError
from .nn import TrainConfig
from .ofdm import OfdmConfig
from .sat import SatConfig
from .techniques import ReducerSettings, parse_techniques

TOP_LEVEL_KEYS = {
    "seed", "trials", "threads", "out", "techniques", "ofdm", "sat", "slm", "pts", "clip_ratio_db",
    "model_path", "channel", "snr_db", "thresholds_db", "train", "denoise", "k_values", "mimo",
    "data_source",
}
SUPPORTED_DATA_SOURCES = ("synthetic",)


class NotImplementedFeature(InvalidInputError):
    """A recognised configuration value the artifact deliberately does not implement."""


def _parse_float(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "none", "noiseless"):
        return math.inf
    return float(v)


def _build(cls, raw: dict, section: str, convert=None):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise InvalidInputError(f"[{section}] must be an object")
    known = {f.name for f in fields(cls)}
    extra = set(raw) - known
    if extra:
        raise InvalidInputError(f"[{section}] unknown keys: {sorted(extra)}")
    kwargs = dict(raw)
    if convert:
        kwargs = convert(kwargs)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InvalidInputError(f"[{section}] {exc}") from None


def _ofdm_convert(kw):
    if "guard_fraction" in kw:
        kw["guard_fraction"] = Fraction(str(kw["guard_fraction"]))
    return kw


def _pts_convert(kw):
    if "phase_set" in kw:
        kw["phase_set"] = tuple(complex(str(p).replace(" ", "")) for p in kw["phase_set"])
    return kw


def _channel_convert(kw):
    if "tap_powers" in kw:
        kw["tap_powers"] = tuple(float(p) for p in kw["tap_powers"])
    if "snr_db" in kw:
        kw["snr_db"] = _parse_float(kw["snr_db"])
    return kw


def _train_convert(kw):
    if "goal_mse" in kw:
        kw["goal_mse"] = _parse_float(kw["goal_mse"])
    return kw


@dataclass
class DenoiseSettings:
    families: tuple = ("haar", "db4")
    levels: tuple = (1, 2, 3)
    input_snr_db: tuple = (5.0, 10.0, 15.0, 20.0, math.inf)
    rule: str = "soft"
    oversampling: int = 16


def _denoise_convert(kw):
    for key in ("families", "levels"):
        if key in kw:
            kw[key] = tuple(kw[key])
    if "input_snr_db" in kw:
        kw["input_snr_db"] = tuple(_parse_float(v) for v in kw["input_snr_db"])
    return kw


@dataclass
class ExperimentConfig:
    seed: int = 0
    trials: int | None = None  # each command has its own default
    threads: int = 1
    out: str | None = None
    techniques: list = field(default_factory=lambda: ["none", "sat"])
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    sat: SatConfig = field(default_factory=SatConfig)
    slm: SlmConfig = field(default_factory=SlmConfig)
    pts: PtsConfig = field(default_factory=PtsConfig)
    clip_ratio_db: float = 3.0
    model_path: str | None = None
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    snr_db: tuple = (0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0, 28.0)
    thresholds_db: tuple | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    denoise: DenoiseSettings = field(default_factory=DenoiseSettings)
    k_values: tuple = (1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
    data_source: str = "synthetic"

    def validate(self) -> "ExperimentConfig":
        if self.trials is not None and self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if self.threads < 1:
            raise InvalidInputError("threads must be >= 1")
        if self.data_source not in SUPPORTED_DATA_SOURCES:
            raise NotImplementedFeature(
                f"data_source {self.data_source!r} is not available; only {SUPPORTED_DATA_SOURCES} is implemented")
        self.techniques = parse_techniques(self.techniques)
        if self.thresholds_db is not None and np.any(np.diff(self.thresholds_db) <= 0):
            raise InvalidInputError("thresholds_db must be strictly increasing")
        return self

    def reducer_settings(self) -> ReducerSettings:
        return ReducerSettings(self.sat, self.slm, self.pts, self.clip_ratio_db, self.model_path,
                               oversampling=self.ofdm.oversampling)


def _threshold_grid(raw):
    if isinstance(raw, dict):
        start, stop, step = (float(raw[k]) for k in ("start", "stop", "step"))
        n = int(round((stop - start) / step))
        return tuple(np.round(start + step * np.arange(n + 1), 10))
    return tuple(float(v) for v in raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    extra = set(raw) - TOP_LEVEL_KEYS
    if extra:
        raise InvalidInputError(f"unknown config keys: {sorted(extra)}")
    mimo = raw.get("mimo")
    if mimo not in (None, "none", "siso"):
        raise NotImplementedFeature(f"MIMO mode {mimo!r} (V-BLAST) is not implemented; only SISO links are simulated")
    cfg = ExperimentConfig()
    for key in ("seed", "trials", "threads"):
        if key in raw:
            setattr(cfg, key, int(raw[key]))
    for key in ("out", "model_path", "data_source"):
        if key in raw:
            setattr(cfg, key, raw[key])
    if "techniques" in raw:
        cfg.techniques = raw["techniques"]
    if "clip_ratio_db" in raw:
        cfg.clip_ratio_db = _parse_float(raw["clip_ratio_db"])
    cfg.ofdm = _build(OfdmConfig, raw.get("ofdm"), "ofdm", _ofdm_convert)
    cfg.sat = _build(SatConfig, raw.get("sat"), "sat")
    cfg.slm = _build(SlmConfig, raw.get("slm"), "slm")
    cfg.pts = _build(PtsConfig, raw.get("pts"), "pts", _pts_convert)
    cfg.channel = _build(ChannelConfig, raw.get("channel"), "channel", _channel_convert)
    cfg.train = _build(TrainConfig, raw.get("train"), "train", _train_convert)
    cfg.denoise = _build(DenoiseSettings, raw.get("denoise"), "denoise", _denoise_convert)
    if "snr_db" in raw:
        cfg.snr_db = tuple(_parse_float(v) for v in raw["snr_db"])
    if "thresholds_db" in raw:
        cfg.thresholds_db = _threshold_grid(raw["thresholds_db"])
    if "k_values" in raw:
        cfg.k_values = tuple(float(v) for v in raw["k_values"])
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidInputError("config root must be an object")
    return config_from_dict(raw)
