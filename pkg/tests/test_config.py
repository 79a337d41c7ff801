import json
import math

import pytest

from satpapr.config import NotImplementedFeature, config_from_dict, load_config
from satpapr.errors import InvalidInputError


def test_defaults():
    cfg = config_from_dict({}).validate()
    assert cfg.sat.k == 2.5 and cfg.data_source == "synthetic"
    assert cfg.techniques == ["none", "sat"]


def test_sections_parsed(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({
        "seed": 3, "ofdm": {"guard_fraction": "1/8"}, "sat": {"k": 2.0, "filter": "weighted"},
        "snr_db": [0, "inf"], "thresholds_db": {"start": 0, "stop": 1, "step": 0.5},
        "pts": {"phase_set": ["1", "-1"]}, "train": {"goal_mse": "inf"},
    }))
    cfg = load_config(p).validate()
    assert cfg.seed == 3 and cfg.ofdm.prefix_len == 64
    assert cfg.sat.filter == "weighted" and cfg.snr_db == (0.0, math.inf)
    assert cfg.thresholds_db == (0.0, 0.5, 1.0)
    assert cfg.pts.phase_set == (1, -1) and math.isinf(cfg.train.goal_mse)


@pytest.mark.parametrize("raw", [
    {"bogus": 1}, {"sat": {"kk": 1}}, {"sat": 3}, {"techniques": ["none", "magic"]},
    {"threads": 0}, {"thresholds_db": [1, 0]},
])
def test_invalid(raw):
    with pytest.raises(InvalidInputError):
        config_from_dict(raw).validate()


@pytest.mark.parametrize("raw", [{"mimo": "vblast"}, {"data_source": "measured_ims"}])
def test_unimplemented_features(raw):
    with pytest.raises(NotImplementedFeature):
        config_from_dict(raw).validate()


def test_unreadable(tmp_path):
    with pytest.raises(InvalidInputError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(InvalidInputError):
        load_config(bad)
