"""Neural predictor networks, flat parameter vectors, forward and MSE gradient."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..iq import N_INPUT
from . import nn
from .spec import N_IN_REAL, N_OUT_REAL, Architecture, ModelSpec


class ShapeError(ValueError):
    pass


@lru_cache(maxsize=64)
def build_network(spec: ModelSpec) -> nn.Sequential:
    """Layer stack for a neural ``spec``; input (B, 64) reals, output (B, 8)."""
    arch = spec.architecture
    p = spec.dropout
    layers: list[nn.Layer] = []
    if arch is Architecture.DNN:
        n_in = N_IN_REAL
        for i, h in enumerate(spec.hidden):
            layers += [nn.Dense(f"fc{i}", n_in, h), nn.ReLU(), nn.Dropout(p)]
            n_in = h
    elif arch is Architecture.LSTM:
        layers.append(nn.Reshape((N_INPUT, 2)))
        n_in = 2
        for i, h in enumerate(spec.hidden):
            last = i == len(spec.hidden) - 1
            layers += [nn.LSTM(f"lstm{i}", n_in, h, return_sequences=not last), nn.Dropout(p)]
            n_in = h
        for i, h in enumerate(spec.head):
            layers += [nn.Dense(f"fc{i}", n_in, h), nn.ReLU(), nn.Dropout(p)]
            n_in = h
    elif arch is Architecture.DCNN1:
        layers.append(nn.Reshape((N_INPUT, 2)))
        t, c = N_INPUT, 2
        for i, d in enumerate(spec.dilations):
            conv = nn.Conv1d(f"conv{i}", c, spec.filters, spec.width, d)
            t, c = conv.out_len(t), spec.filters
            layers += [conv, nn.ReLU()]
        layers.append(nn.Reshape((t * c,)))
        n_in = t * c
        for i, h in enumerate(spec.head):
            layers += [nn.Dense(f"fc{i}", n_in, h), nn.ReLU(), nn.Dropout(p)]
            n_in = h
    elif arch is Architecture.DCNN2:
        F = spec.filters
        layers += [nn.Reshape((N_INPUT, 2)), nn.Conv1d("inproj", 2, F, 1)]
        for i, d in enumerate(spec.dilations):
            layers.append(nn.GatedResidual(f"block{i}", F, spec.width, d))
        layers += [nn.Reshape((N_INPUT * F,)), nn.Dropout(p)]
        n_in = N_INPUT * F
        for i, h in enumerate(spec.head):
            layers += [nn.Dense(f"fc{i}", n_in, h), nn.ReLU(), nn.Dropout(p)]
            n_in = h
    else:
        raise ValueError(f"{arch.value} is not a neural architecture")
    layers.append(nn.Dense("out", n_in, N_OUT_REAL))
    return nn.Sequential(layers)


def param_layout(spec: ModelSpec) -> list[tuple[str, tuple[int, ...], int]]:
    """``(name, shape, offset)`` for every parameter in the flat vector."""
    out = []
    off = 0
    for name, shape in build_network(spec).param_shapes():
        out.append((name, shape, off))
        off += int(np.prod(shape))
    return out


def param_count(spec: ModelSpec) -> int:
    return sum(int(np.prod(s)) for _, s, _ in param_layout(spec))


def unflatten(spec: ModelSpec, theta: np.ndarray) -> dict[str, np.ndarray]:
    """Views into ``theta`` keyed by parameter name."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (param_count(spec),):
        raise ShapeError(f"expected {param_count(spec)} parameters, got {theta.shape}")
    return {name: theta[off:off + int(np.prod(shape))].reshape(shape) for name, shape, off in param_layout(spec)}


def flatten(spec: ModelSpec, P: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(P[name], dtype=np.float64).ravel() for name, _, _ in param_layout(spec)])


def init_params(spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    return flatten(spec, build_network(spec).init(rng))


def _as_batch(x: np.ndarray, dtype=np.float64) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=dtype)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != N_IN_REAL:
        raise ShapeError(f"expected input of width {N_IN_REAL}, got shape {x.shape}")
    return x, single


def _params(spec: ModelSpec, theta: np.ndarray, dtype) -> dict[str, np.ndarray]:
    P = unflatten(spec, theta)
    if dtype != np.float64:
        P = {k: v.astype(dtype) for k, v in P.items()}
    return P


def forward(spec: ModelSpec, theta: np.ndarray, x: np.ndarray, mode: str = "infer",
            rng: np.random.Generator | None = None, dtype=np.float64) -> np.ndarray:
    """Predict 8 reals from 64 reals (or a batch of rows).

    ``mode="train"`` applies dropout with ``rng``; ``"infer"`` is deterministic.
    ``dtype`` selects the compute precision (float32 is used for bulk work).
    """
    if mode not in ("train", "infer"):
        raise ValueError("mode must be 'train' or 'infer'")
    xb, single = _as_batch(x, dtype)
    y, _ = build_network(spec).forward(_params(spec, theta, dtype), xb, mode == "train", rng)
    y = y.astype(np.float64)
    return y[0] if single else y


def loss_and_grad(spec: ModelSpec, theta: np.ndarray, x: np.ndarray, y: np.ndarray,
                  rng: np.random.Generator | None = None, dtype=np.float64) -> tuple[float, np.ndarray]:
    """Mean squared error over the batch and the 8 outputs, with its exact gradient.

    With ``rng`` the network runs in train mode (dropout active); without it in
    inference mode. The gradient is returned as float64 regardless of ``dtype``.
    """
    xb, _ = _as_batch(x, dtype)
    yb = np.asarray(y, dtype=dtype).reshape(len(xb), N_OUT_REAL)
    if len(xb) == 0:
        raise ValueError("empty batch")
    net = build_network(spec)
    P = _params(spec, theta, dtype)
    pred, caches = net.forward(P, xb, rng is not None, rng)
    r = pred - yb
    mse = float(np.mean(r.astype(np.float64) ** 2))
    if dtype == np.float64:
        grad = np.zeros(param_count(spec))
        G = unflatten(spec, grad)
    else:
        G = {k: np.zeros_like(v) for k, v in P.items()}
    net.backward(P, caches, r * dtype(2.0 / r.size), G)
    if dtype != np.float64:
        grad = flatten(spec, G)
    return mse, grad
