import csv
import json
import math

import pytest

from satpapr.cli import COMPARE_HEADER, DENOISE_HEADER, KSWEEP_HEADER, TRAIN_HEADER, main


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_ccdf_single_trial_is_a_step(tmp_path):
    code, out = run(tmp_path, "ccdf", "--trials", "1", "--technique", "none")
    assert code == 0
    r = rows(out)
    assert r[0] == ["threshold_db", "ccdf_none"]
    probs = [float(x[1]) for x in r[1:]]
    assert set(probs) <= {0.0, 1.0} and probs[0] == 1.0 and probs[-1] == 0.0
    assert probs == sorted(probs, reverse=True)


def test_ccdf_rerun_byte_identical(tmp_path):
    _, a = run(tmp_path, "ccdf", "--trials", "300", "--technique", "none,sat", "--seed", "2", name="a.csv")
    _, b = run(tmp_path, "ccdf", "--trials", "300", "--technique", "none,sat", "--seed", "2", "--threads", "4",
               name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_ccdf_summary_on_stdout(tmp_path, capsys):
    run(tmp_path, "ccdf", "--trials", "50", "--technique", "none")
    assert capsys.readouterr().out.startswith("papr_at_2pct none ")


def test_compare(tmp_path):
    code, out = run(tmp_path, "compare", "--trials", "2000", "--technique", "sat")
    r = rows(out)
    assert code == 0 and r[0] == COMPARE_HEADER
    by = {x[1]: x for x in r[1:]}
    assert float(by["none"][3]) == 0.0 and by["none"][0] == "synthetic"
    assert float(by["sat"][2]) < float(by["none"][2])


def test_k_sweep(tmp_path):
    code, out = run(tmp_path, "k-sweep", "--trials", "200")
    r = rows(out)
    assert code == 0 and r[0] == KSWEEP_HEADER
    thresholds = [float(x[1]) for x in r[1:]]
    assert [float(x[0]) for x in r[1:]] == [1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
    assert thresholds == sorted(thresholds, reverse=True)


def test_denoise_eval(tmp_path):
    code, out = run(tmp_path, "denoise-eval", "--trials", "10")
    r = rows(out)
    assert code == 0 and r[0] == DENOISE_HEADER
    body = [dict(zip(r[0], x)) for x in r[1:]]
    assert {x["family"] for x in body} == {"haar", "db4"}
    for x in body:
        if x["input_snr_db"] == "infinite":
            assert x["mse_before"] == x["mse_after"] and x["snr_after_db"] == "infinite"
        if x["input_snr_db"] == "10":
            assert float(x["snr_after_db"]) >= float(x["snr_before_db"])


def test_ber_noiseless_and_bound(tmp_path):
    code, out = run(tmp_path, "ber", "--trials", "20", "--snr", "10,inf", "--technique", "none")
    r = rows(out)
    assert code == 0 and r[0] == ["snr_db", "ber_none", "ber_chernoff_bound"]
    assert r[2][0] == "infinite" and float(r[2][1]) == 0.0
    assert float(r[1][2]) >= float(r[1][1])


def test_train_nn_not_converged(tmp_path):
    code, out = run(tmp_path, "train-nn", "--trials", "5", "--max-epochs", "3")
    assert code == 3
    r = rows(out)
    assert r[0] == TRAIN_HEADER and len(r) >= 2
    assert (tmp_path / "out.mlp").exists()


def test_train_then_use_model(tmp_path):
    model = tmp_path / "m.mlp"
    code, _ = run(tmp_path, "train-nn", "--trials", "5", "--goal-mse", "inf", "--model", str(model))
    assert code == 0
    code, out = run(tmp_path, "ccdf", "--trials", "20", "--technique", "nn", "--model", str(model), name="c.csv")
    assert code == 0 and rows(out)[0] == ["threshold_db", "ccdf_none", "ccdf_nn"] or rows(out)[0][-1] == "ccdf_nn"


@pytest.mark.parametrize("argv", [
    ["ccdf", "--technique", "wizard"],
    ["ccdf", "--trials", "0"],
    ["ccdf", "--filter", "median"],
    ["nonsense"],
])
def test_config_errors_exit_1(argv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_mimo_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mimo": "vblast"}))
    assert main(["ccdf", "--config", str(cfg)]) == 1


def test_nn_without_model_is_config_error(tmp_path):
    assert main(["ccdf", "--trials", "2", "--technique", "nn", "--model", str(tmp_path / "none.mlp")]) == 1
