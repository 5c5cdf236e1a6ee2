"""Mini-batch MSE training for the neural predictors."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..iq import IQBuffer, as_samples, complex_to_real, derive_seed, make_rng, mean_power, window_arrays
from .models import forward, init_params, loss_and_grad
from .spec import ModelSpec, Optimizer, TrainConfig

log = logging.getLogger(__name__)


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> None:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad**2
        mhat = self.m / (1 - self.b1**self.t)
        vhat = self.v / (1 - self.b2**self.t)
        theta -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, theta: np.ndarray, grad: np.ndarray) -> None:
        theta -= self.lr * grad


@dataclass
class Dataset:
    """Real-valued windows split into contiguous train and validation blocks."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    val_start: int  # first sample index covered by a validation window


def make_dataset(samples: np.ndarray, cfg: TrainConfig) -> Dataset:
    X, Y, starts = window_arrays(samples, cfg.stride)
    if cfg.max_windows is not None and len(X) > cfg.max_windows:
        keep = np.linspace(0, len(X) - 1, cfg.max_windows).round().astype(int)
        X, Y, starts = X[keep], Y[keep], starts[keep]
    n = len(X)
    if n == 0:
        raise ValueError("dataset too short to form a single window")
    n_val = min(max(int(round(n * cfg.val_split)), 1), n - 1) if n > 1 else 0
    n_tr = n - n_val
    Xr, Yr = complex_to_real(X), complex_to_real(Y)
    if n_val == 0:
        return Dataset(Xr, Yr, Xr, Yr, int(starts[0]))
    return Dataset(Xr[:n_tr], Yr[:n_tr], Xr[n_tr:], Yr[n_tr:], int(starts[n_tr]))


BULK_DTYPE = np.float32


def batched_forward(spec: ModelSpec, theta: np.ndarray, x: np.ndarray, batch: int = 2048,
                    dtype=BULK_DTYPE) -> np.ndarray:
    if len(x) == 0:
        return np.zeros((0, 8))
    return np.concatenate([forward(spec, theta, x[i:i + batch], dtype=dtype) for i in range(0, len(x), batch)])


def train(spec: ModelSpec, dataset: IQBuffer | np.ndarray, cfg: TrainConfig = TrainConfig()):
    """Fit a neural predictor by minimizing window MSE.

    The band is first scaled to unit mean power; the scale is kept on the
    returned predictor. Returns ``(NeuralPredictor, history)`` where history has
    one ``{"epoch", "train_mse", "val_mse"}`` dict per epoch.
    """
    from .stream import NeuralPredictor

    if not spec.is_neural:
        raise ValueError(f"{spec.architecture.value} is not trained offline")
    raw = as_samples(dataset)
    power = mean_power(raw)
    if power <= 0:
        raise ValueError("cannot train on a zero-power band")
    scale = 1.0 / np.sqrt(power)
    data = make_dataset(raw * scale, cfg)
    theta = init_params(spec, make_rng(derive_seed(cfg.seed, "init")))
    rng = make_rng(derive_seed(cfg.seed, "train"))
    opt = Adam(cfg.learning_rate) if cfg.optimizer is Optimizer.ADAM else SGD(cfg.learning_rate)
    history = []
    n = len(data.x_train)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for i in range(0, n, cfg.batch_size):
            idx = order[i:i + cfg.batch_size]
            loss, grad = loss_and_grad(spec, theta, data.x_train[idx], data.y_train[idx], rng=rng,
                                       dtype=BULK_DTYPE)
            opt.step(theta, grad)
            total += loss * len(idx)
        val = float(np.mean((batched_forward(spec, theta, data.x_val) - data.y_val) ** 2))
        history.append({"epoch": epoch, "train_mse": total / n, "val_mse": val})
        log.info("epoch %d train %.5g val %.5g", epoch, total / n, val)
    return NeuralPredictor(spec, theta, scale), history
