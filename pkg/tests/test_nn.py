import numpy as np
import pytest

from satpapr.errors import InvalidInputError
from satpapr.experiments import sat_training_set
from satpapr.metrics import papr_db
from satpapr.nn import (MlpModel, TrainConfig, bipolar_sigmoid, forward, load_model, loss_and_grad, nn_reduce,
                        save_model, sse_half_grad, train)
from satpapr.ofdm import OfdmConfig, ifft_unitary, map_qam64


def test_bipolar_sigmoid_values():
    x = np.linspace(-50, 50, 1000)
    assert bipolar_sigmoid(0.0) == 0.0
    assert np.allclose(bipolar_sigmoid(-x), -bipolar_sigmoid(x))
    assert np.allclose(bipolar_sigmoid(x), np.tanh(x / 2), atol=1e-12)
    small = np.linspace(-5, 5, 101)
    assert np.allclose(bipolar_sigmoid(small), (1 - np.exp(-small)) / (1 + np.exp(-small)), atol=1e-12)
    assert np.isfinite(bipolar_sigmoid(np.array([-1e6, 1e6]))).all()


def test_zero_model_outputs_zero(rng):
    assert np.array_equal(forward(MlpModel.zeros(), rng.normal(size=512)), np.zeros(512))


def test_output_bias_passthrough(rng):
    m = MlpModel.random(rng)
    m.w2[:] = 0
    v = rng.normal(size=512)
    m.b2 = v
    assert np.array_equal(forward(m, rng.normal(size=512)), v)


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        forward(MlpModel.zeros(), np.ones(100))
    with pytest.raises(InvalidInputError):
        nn_reduce(MlpModel.zeros(), np.ones(100, complex))


def test_gradient_vs_finite_differences(rng):
    for trial in range(5):
        m = MlpModel.random(rng, 7, 4, 5)
        x = rng.normal(size=(3, 7))
        t = rng.normal(size=(3, 5))
        _, g = sse_half_grad(m, x, t)
        theta = m.flat()
        analytic = g.flat()
        numeric = np.empty_like(theta)
        h = 1e-5
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = h
            fp = sse_half_grad(m.with_flat(theta + e), x, t)[0]
            fm = sse_half_grad(m.with_flat(theta - e), x, t)[0]
            numeric[i] = (fp - fm) / (2 * h)
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
        big = np.abs(numeric) > 1e-6
        assert np.max(rel[big]) < 1e-4
        assert np.max(np.abs(analytic - numeric)) < 1e-8 + 1e-4 * np.abs(numeric).max()


def test_identity_dataset_converges_fast(rng):
    x = np.abs(rng.normal(size=(20, 512)))
    model, rep = train(None, x, x, TrainConfig(goal_mse=1e-6, max_epochs=50, init="pca", init_gain=0.01))
    assert rep.final_mse < 1e-6
    assert rep.epochs_used <= 10
    out = nn_reduce(model, ifft_unitary(np.ones(512)) * 0 + x[0])
    assert np.mean((np.abs(out) - x[0]) ** 2) < 1e-4


def test_goal_infinite_stops_after_one_epoch(rng):
    x = rng.random((5, 512))
    _, rep = train(None, x, x, TrainConfig(goal_mse=float("inf")))
    assert rep.epochs_used == 1 and len(rep.mse_history) == 2
    assert rep.final_mse == rep.mse_history[-1]


def test_empty_dataset():
    with pytest.raises(InvalidInputError):
        train(None, np.zeros((0, 512)), np.zeros((0, 512)))


@pytest.mark.parametrize("optimizer", ["powell_beale_cg", "gradient_descent"])
def test_both_optimizers_reduce_loss(optimizer, rng):
    # separable toy map: target is the sign pattern of the first input coordinate
    x = rng.normal(size=(40, 8))
    t = np.repeat(np.sign(x[:, :1]), 8, axis=1)
    m0 = MlpModel.random(np.random.default_rng(1), 8, 4, 8)
    initial = loss_and_grad(m0.with_flat(m0.flat()), x / np.sqrt(np.mean(x * x)), t / np.sqrt(np.mean(x * x)))[0]
    _, rep = train(m0, x, t, TrainConfig(optimizer=optimizer, learning_rate=0.05, max_epochs=200, goal_mse=1e-9))
    assert rep.mse_history[0] == pytest.approx(initial)
    assert rep.final_mse < initial


def test_training_deterministic(rng):
    x, t = sat_training_set(10, 3, OfdmConfig())
    cfg = TrainConfig(max_epochs=30, init="random", seed=4)
    a = train(None, x, t, cfg)
    b = train(None, x, t, cfg)
    assert a[1].mse_history == b[1].mse_history
    assert np.array_equal(a[0].flat(), b[0].flat())


def test_final_not_above_initial(rng):
    x, t = sat_training_set(20, 1, OfdmConfig())
    _, rep = train(None, x, t, TrainConfig(max_epochs=100))
    assert rep.final_mse <= rep.mse_history[0]


def test_nn_reduce_keeps_phase_and_sign(rng):
    m = MlpModel.random(rng)
    x = ifft_unitary(map_qam64(rng.integers(0, 2, 3072)))
    y = nn_reduce(m, x)
    assert np.all(np.abs(y) >= 0)
    nz = np.abs(y) > 0
    assert np.allclose(np.angle(y[nz]), np.angle(x[nz]))


def test_sat_trained_model_lowers_mean_papr():
    x, t = sat_training_set(100, 11, OfdmConfig())
    model, _ = train(None, x, t, TrainConfig(max_epochs=300))
    rng = np.random.default_rng(99)
    held = ifft_unitary(map_qam64(rng.integers(0, 2, (1000, 3072))))
    assert papr_db(nn_reduce(model, held)).mean() < papr_db(held).mean()


def test_model_file_roundtrip(tmp_path, rng):
    m = MlpModel.random(rng)
    m.scale = 0.987654321
    p = tmp_path / "m.mlp"
    save_model(m, p)
    back = load_model(p)
    assert np.array_equal(back.flat(), m.flat()) and back.scale == m.scale
    again = tmp_path / "again.mlp"
    save_model(back, again)
    assert again.read_bytes() == p.read_bytes()
    first = p.read_text().splitlines()[0]
    assert first == "satpapr-mlp 1"
    p.write_text(p.read_text().replace("satpapr-mlp 1", "satpapr-mlp 9"))
    with pytest.raises(InvalidInputError):
        load_model(p)
