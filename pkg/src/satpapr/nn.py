"""
512-30-512 feed-forward PAPR reducer trained by conjugate-gradient backprop.

The network maps a symbol's magnitude envelope to a reduced envelope; phases
pass straight through. Hidden units use the bipolar sigmoid, the output
layer is linear.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

FORMAT_TAG = "satpapr-mlp"
FORMAT_VERSION = 1
OPTIMIZERS = ("powell_beale_cg", "gradient_descent")
INITS = ("pca", "random")


def bipolar_sigmoid(x):
    """(1 - e^-x) / (1 + e^-x), evaluated as tanh(x/2) to avoid overflow."""
    return np.tanh(0.5 * np.asarray(x, dtype=float))


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    scale: float = 1.0  # envelope rms used for input/target normalisation
    hidden_activation: str = "bipolar_sigmoid"
    output_activation: str = "linear"

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    @classmethod
    def zeros(cls, n_in: int = 512, n_hidden: int = 30, n_out: int = 512) -> "MlpModel":
        return cls(np.zeros((n_hidden, n_in)), np.zeros(n_hidden), np.zeros((n_out, n_hidden)), np.zeros(n_out))

    @classmethod
    def random(cls, rng: np.random.Generator, n_in: int = 512, n_hidden: int = 30,
               n_out: int = 512) -> "MlpModel":
        return cls(rng.normal(0.0, 1.0 / math.sqrt(n_in), (n_hidden, n_in)),
                   rng.normal(0.0, 0.1, n_hidden),
                   rng.normal(0.0, 1.0 / math.sqrt(n_hidden), (n_out, n_hidden)),
                   np.zeros(n_out))

    @classmethod
    def near_identity(cls, inputs, n_hidden: int = 30, gain: float = 0.01) -> "MlpModel":
        """Autoencoder start point: identity on the top principal subspace of ``inputs``.

        The hidden layer works in its near-linear region (slope 1/2 at 0).
        """
        x = np.atleast_2d(np.asarray(inputs, dtype=float))
        mean = x.mean(axis=0)
        _, _, vt = np.linalg.svd(x - mean, full_matrices=False)
        basis = np.zeros((n_hidden, x.shape[1]))
        r = min(n_hidden, vt.shape[0])
        basis[:r] = vt[:r]
        w1 = gain * basis
        b1 = -w1 @ mean
        w2 = basis.T * (2.0 / gain)
        return cls(w1, b1, w2, mean.copy())

    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])

    def with_flat(self, theta: np.ndarray) -> "MlpModel":
        n_in, n_h, n_out = self.shape
        a = n_h * n_in
        b = a + n_h
        c = b + n_out * n_h
        return MlpModel(theta[:a].reshape(n_h, n_in).copy(), theta[a:b].copy(),
                        theta[b:c].reshape(n_out, n_h).copy(), theta[c:].copy(), self.scale,
                        self.hidden_activation, self.output_activation)


def _check_input(model: MlpModel, x: np.ndarray) -> None:
    if x.shape[-1] != model.w1.shape[1]:
        raise InvalidInputError(f"model expects {model.w1.shape[1]} inputs, got {x.shape[-1]}")


def forward(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    _check_input(model, x)
    return bipolar_sigmoid(x @ model.w1.T + model.b1) @ model.w2.T + model.b2


def loss_and_grad(model: MlpModel, x: np.ndarray, t: np.ndarray) -> tuple[float, MlpModel]:
    """Mean squared error over every output element, and its gradient."""
    z = x @ model.w1.T + model.b1
    h = bipolar_sigmoid(z)
    y = h @ model.w2.T + model.b2
    e = y - t
    mse = float(np.mean(e * e))
    dy = (2.0 / e.size) * e
    dh = dy @ model.w2
    dz = dh * 0.5 * (1.0 - h * h)
    grad = MlpModel(dz.T @ x, dz.sum(axis=0), dy.T @ h, dy.sum(axis=0), model.scale)
    return mse, grad


def sse_half_grad(model: MlpModel, x: np.ndarray, t: np.ndarray) -> tuple[float, MlpModel]:
    """0.5*||forward(x) - t||^2 and its gradient (used by the gradient check)."""
    mse, g = loss_and_grad(model, x, t)
    n = np.asarray(t).size
    f = 0.5 * n
    return mse * f, MlpModel(g.w1 * f, g.b1 * f, g.w2 * f, g.b2 * f)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    goal_mse: float = 1e-3
    max_epochs: int = 25000
    optimizer: str = "powell_beale_cg"
    seed: int = 0
    init: str = "pca"
    init_gain: float = 0.1
    min_grad: float = 1e-10
    n_hidden: int = 30

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError("learning_rate must be positive")
        if not self.goal_mse > 0:
            raise InvalidInputError("goal_mse must be positive")
        if self.max_epochs < 1:
            raise InvalidInputError("max_epochs must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise InvalidInputError(f"optimizer must be one of {OPTIMIZERS}")
        if self.init not in INITS:
            raise InvalidInputError(f"init must be one of {INITS}")


@dataclass
class TrainReport:
    final_mse: float
    epochs_used: int
    mse_history: list = field(default_factory=list)
    converged: bool = False
    restarts: int = 0


class _Objective:
    def __init__(self, template: MlpModel, x: np.ndarray, t: np.ndarray):
        self.template, self.x, self.t = template, x, t

    def __call__(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        mse, g = loss_and_grad(self.template.with_flat(theta), self.x, self.t)
        return mse, g.flat()


def _line_search(obj, theta, f0, g0, d, step, c1=1e-4, c2=0.1, max_evals=25):
    """Bracketing line search with secant/quadratic interpolation.

    Starts at ``step``, expands while the directional derivative stays
    negative and the decrease condition holds, and backtracks inside the
    bracket otherwise. Stops at the first point meeting both the sufficient
    decrease and the curvature (|slope| <= c2 |slope0|) conditions, or
    returns the best acceptable point seen. Returns (step, f, g) or None.
    """
    s0 = float(g0 @ d)
    if s0 >= 0:
        return None
    lo, f_lo, s_lo = 0.0, f0, s0
    hi = f_hi = s_hi = None
    best = None
    a = step
    for _ in range(max_evals):
        f, g = obj(theta + a * d)
        s = float(g @ d) if np.isfinite(f) else math.nan
        if not np.isfinite(f) or f > f0 + c1 * a * s0 or f >= f_lo and lo > 0:
            hi, f_hi, s_hi = a, f, s
        else:
            best = (a, f, g)
            if abs(s) <= -c2 * s0:
                return best
            if s > 0:
                hi, f_hi, s_hi = a, f, s
            else:
                lo, f_lo, s_lo = a, f, s
        if hi is None:
            a = 4.0 * a
            continue
        width = hi - lo
        if np.isfinite(s_hi) and s_hi > 0:
            trial = lo - s_lo * width / (s_hi - s_lo)
        elif np.isfinite(f_hi):
            curv = f_hi - f_lo - s_lo * width
            trial = lo - s_lo * width * width / (2.0 * curv) if curv > 0 else lo + 0.5 * width
        else:
            trial = lo + 0.1 * width
        a = min(max(trial, lo + 0.1 * width), hi - 0.1 * width)
        if width <= 1e-14 * max(1.0, hi):
            break
    return best


def _train_cg(obj, theta, cfg: TrainConfig, history: list) -> tuple[np.ndarray, bool, int]:
    """Beale-Powell restarted conjugate gradient.

    A restart is taken when consecutive gradients lose orthogonality
    (|g_k . g_{k-1}| >= 0.2 |g_k|^2) or after n steps; the direction at a
    restart becomes the reference for the three-term updates that follow.
    Between restarts, a direction that is not a sufficient descent direction
    falls back to steepest descent.
    """
    f, g = obj(theta)
    history.append(f)
    d = -g
    d_t = y_t = None
    step = cfg.learning_rate
    restarts = 0
    n = theta.size
    since_restart = 0
    steepest = True
    for _ in range(cfg.max_epochs):
        if float(g @ g) <= cfg.min_grad ** 2:
            return theta, True, restarts
        found = _line_search(obj, theta, f, g, d, step)
        if found is None:
            if steepest:
                return theta, True, restarts  # no decrease even along -g
            d, d_t, y_t, since_restart, steepest = -g, None, None, 0, True
            step = cfg.learning_rate
            restarts += 1
            continue
        alpha, f_new, g_new = found
        theta = theta + alpha * d
        y = g_new - g
        gg = float(g_new @ g_new)
        dy = float(d @ y)
        beta = float(g_new @ y) / dy if dy else 0.0
        since_restart += 1
        d_beale = -g_new + beta * d
        d_new = None
        if d_t is not None and since_restart < n and abs(float(g_new @ g)) < 0.2 * gg:
            ty = float(d_t @ y_t)
            d_new = d_beale + (float(g_new @ y_t) / ty) * d_t if ty else d_beale
            if not -1.2 * gg <= float(d_new @ g_new) <= -0.8 * gg:
                d_new = None
        if d_new is None:
            restarts += 1
            d_t, y_t, since_restart = d, y, 0
            d_new = d_beale
            if float(d_new @ g_new) >= 0:
                d_new, d_t, y_t = -g_new, None, None
        steepest = d_t is None
        step = alpha * math.sqrt(float(d @ d) / max(float(d_new @ d_new), 1e-300))
        d, g, f = d_new, g_new, f_new
        history.append(f)
        if f <= cfg.goal_mse:
            return theta, True, restarts
    return theta, False, restarts


def _train_gd(obj, theta, cfg: TrainConfig, history: list) -> tuple[np.ndarray, bool, int]:
    f, g = obj(theta)
    history.append(f)
    for _ in range(cfg.max_epochs):
        theta = theta - cfg.learning_rate * g
        f, g = obj(theta)
        history.append(f)
        if f <= cfg.goal_mse:
            return theta, True, 0
    return theta, False, 0


def train(model: MlpModel | None, inputs, targets, cfg: TrainConfig = TrainConfig()) -> tuple[MlpModel, TrainReport]:
    """Full-batch training on (envelope, target envelope) pairs.

    Inputs and targets are divided by the rms of ``inputs`` first; the scale
    is stored on the returned model. ``model=None`` builds the starting
    point from ``cfg.init``. The MSE figures are on the normalised scale.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.size == 0 or x.shape[0] == 0:
        raise InvalidInputError("empty training set")
    if x.shape != t.shape:
        raise InvalidInputError(f"inputs {x.shape} and targets {t.shape} differ in shape")
    scale = float(np.sqrt(np.mean(x * x))) or 1.0
    xn, tn = x / scale, t / scale
    if model is None:
        if cfg.init == "pca":
            model = MlpModel.near_identity(xn, cfg.n_hidden, cfg.init_gain)
        else:
            model = MlpModel.random(np.random.default_rng(cfg.seed), x.shape[1], cfg.n_hidden, t.shape[1])
    _check_input(model, xn)
    obj = _Objective(model, xn, tn)
    history: list[float] = []
    run = _train_cg if cfg.optimizer == "powell_beale_cg" else _train_gd
    theta, converged, restarts = run(obj, model.flat(), cfg, history)
    trained = model.with_flat(theta)
    trained.scale = scale
    final = history[-1]
    return trained, TrainReport(final, len(history) - 1, history, final <= cfg.goal_mse, restarts)


def predict_envelope(model: MlpModel, envelope) -> np.ndarray:
    """Forward pass in signal units, using the model's stored normalisation."""
    env = np.asarray(envelope, dtype=float)
    return forward(model, env / model.scale) * model.scale


def nn_reduce(model: MlpModel, symbol) -> np.ndarray:
    """Replace each sample's magnitude with the network's prediction; keep phase."""
    x = np.asarray(symbol, dtype=complex)
    _check_input(model, x)
    mag = np.abs(x)
    new_mag = np.maximum(predict_envelope(model, mag), 0.0)
    unit = np.where(mag > 0, x / np.where(mag > 0, mag, 1.0), 1.0)
    return unit * new_mag


def _fmt(a: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in np.ravel(a))


def save_model(model: MlpModel, path) -> None:
    """Text format: tag/version line, JSON header line, then one line per tensor."""
    n_in, n_h, n_out = model.shape
    header = {"n_in": n_in, "n_hidden": n_h, "n_out": n_out,
              "hidden_activation": model.hidden_activation,
              "output_activation": model.output_activation,
              "scale": format(float(model.scale), ".17g"),
              "tensors": ["w1", "b1", "w2", "b2"]}
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}", json.dumps(header, sort_keys=True)]
    for name in header["tensors"]:
        lines.append(f"{name} {_fmt(getattr(model, name))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> MlpModel:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read model {path}: {exc}") from None
    tag = lines[0].split() if lines else []
    if len(tag) != 2 or tag[0] != FORMAT_TAG:
        raise InvalidInputError(f"{path}: not a {FORMAT_TAG} file")
    if int(tag[1]) != FORMAT_VERSION:
        raise InvalidInputError(f"{path}: unsupported format version {tag[1]}")
    h = json.loads(lines[1])
    if h["hidden_activation"] != "bipolar_sigmoid" or h["output_activation"] != "linear":
        raise InvalidInputError(f"{path}: unsupported activations")
    shapes = {"w1": (h["n_hidden"], h["n_in"]), "b1": (h["n_hidden"],),
              "w2": (h["n_out"], h["n_hidden"]), "b2": (h["n_out"],)}
    tensors = {}
    for line in lines[2:]:
        name, _, data = line.partition(" ")
        tensors[name] = np.array(data.split(), dtype=float).reshape(shapes[name])
    return MlpModel(tensors["w1"], tensors["b1"], tensors["w2"], tensors["b2"], float(h["scale"]))
