"""Minimal numpy layers with hand-written reverse-mode gradients.

Layers are stateless: ``forward`` returns ``(y, cache)`` and ``backward``
consumes that cache, accumulates parameter gradients into ``G`` and returns
the gradient with respect to the layer input. Parameters live in a dict of
arrays keyed by ``"<layer>.<param>"``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

Shape = tuple[int, ...]


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def fan_in_uniform(rng: np.random.Generator, shape: Shape, fan_in: int) -> np.ndarray:
    lim = np.sqrt(3.0 / fan_in)
    return rng.uniform(-lim, lim, shape)


class Layer:
    name = ""

    def param_shapes(self) -> list[tuple[str, Shape]]:
        return []

    def init(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return {}

    def forward(self, P, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, P, cache, dy, G):
        raise NotImplementedError


class Reshape(Layer):
    def __init__(self, shape: Shape):
        self.shape = tuple(shape)

    def forward(self, P, x, train=False, rng=None):
        return x.reshape((x.shape[0],) + self.shape), x.shape

    def backward(self, P, cache, dy, G):
        return dy.reshape(cache)


class Dense(Layer):
    def __init__(self, name: str, n_in: int, n_out: int):
        self.name, self.n_in, self.n_out = name, n_in, n_out

    def param_shapes(self):
        return [(f"{self.name}.W", (self.n_in, self.n_out)), (f"{self.name}.b", (self.n_out,))]

    def init(self, rng):
        return {
            f"{self.name}.W": fan_in_uniform(rng, (self.n_in, self.n_out), self.n_in),
            f"{self.name}.b": np.zeros(self.n_out),
        }

    def forward(self, P, x, train=False, rng=None):
        return x @ P[f"{self.name}.W"] + P[f"{self.name}.b"], x

    def backward(self, P, x, dy, G):
        G[f"{self.name}.W"] += x.T @ dy
        G[f"{self.name}.b"] += dy.sum(axis=0)
        return dy @ P[f"{self.name}.W"].T


class ReLU(Layer):
    def forward(self, P, x, train=False, rng=None):
        mask = x > 0
        return x * mask, mask

    def backward(self, P, mask, dy, G):
        return dy * mask


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by 1/(1-p) while training."""

    def __init__(self, p: float):
        if not 0 <= p < 1:
            raise ValueError("dropout rate must be in [0, 1)")
        self.p = p

    def forward(self, P, x, train=False, rng=None):
        if not train or self.p == 0:
            return x, None
        if rng is None:
            raise ValueError("train-mode dropout needs an rng")
        mask = (rng.random(x.shape) >= self.p).astype(x.dtype) / x.dtype.type(1.0 - self.p)
        return x * mask, mask

    def backward(self, P, mask, dy, G):
        return dy if mask is None else dy * mask


class Conv1d(Layer):
    """1-D convolution over ``(batch, time, channels)``.

    ``causal`` left-pads so the output keeps the input length; otherwise the
    convolution is 'valid'.
    """

    def __init__(self, name: str, c_in: int, c_out: int, width: int, dilation: int = 1, causal: bool = False):
        self.name, self.c_in, self.c_out = name, c_in, c_out
        self.width, self.dilation, self.causal = width, dilation, causal

    @property
    def pad(self) -> int:
        return self.dilation * (self.width - 1) if self.causal else 0

    def out_len(self, t: int) -> int:
        return t + self.pad - self.dilation * (self.width - 1)

    def param_shapes(self):
        return [(f"{self.name}.W", (self.width, self.c_in, self.c_out)), (f"{self.name}.b", (self.c_out,))]

    def init(self, rng):
        return {
            f"{self.name}.W": fan_in_uniform(rng, (self.width, self.c_in, self.c_out), self.width * self.c_in),
            f"{self.name}.b": np.zeros(self.c_out),
        }

    def forward(self, P, x, train=False, rng=None):
        W = P[f"{self.name}.W"]
        xp = np.pad(x, ((0, 0), (self.pad, 0), (0, 0))) if self.pad else x
        t_out = self.out_len(x.shape[1])
        y = np.broadcast_to(P[f"{self.name}.b"], (x.shape[0], t_out, self.c_out)).copy()
        for k in range(self.width):
            o = k * self.dilation
            y += xp[:, o:o + t_out, :] @ W[k]
        return y, xp

    def backward(self, P, xp, dy, G):
        W = P[f"{self.name}.W"]
        t_out = dy.shape[1]
        dxp = np.zeros_like(xp)
        gW = G[f"{self.name}.W"]
        dy2 = dy.reshape(-1, self.c_out)
        for k in range(self.width):
            o = k * self.dilation
            gW[k] += xp[:, o:o + t_out, :].reshape(-1, self.c_in).T @ dy2
            dxp[:, o:o + t_out, :] += dy @ W[k].T
        G[f"{self.name}.b"] += dy2.sum(axis=0)
        return dxp[:, self.pad:, :]


class GatedResidual(Layer):
    """Gated dilated-convolution residual block.

    ``y = x + conv1x1(tanh(conv_f(x)) * sigmoid(conv_g(x)))`` with causal
    dilated filter/gate convolutions.
    """

    def __init__(self, name: str, channels: int, width: int, dilation: int):
        self.name = name
        self.filt = Conv1d(f"{name}.filter", channels, channels, width, dilation, causal=True)
        self.gate = Conv1d(f"{name}.gate", channels, channels, width, dilation, causal=True)
        self.proj = Conv1d(f"{name}.proj", channels, channels, 1)

    def param_shapes(self):
        return self.filt.param_shapes() + self.gate.param_shapes() + self.proj.param_shapes()

    def init(self, rng):
        return {**self.filt.init(rng), **self.gate.init(rng), **self.proj.init(rng)}

    @staticmethod
    def merge(a_f: np.ndarray, a_g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gate merge on pre-activations; returns (tanh, sigmoid, product)."""
        t = np.tanh(a_f)
        s = sigmoid(a_g)
        return t, s, t * s

    def forward(self, P, x, train=False, rng=None):
        a_f, cf = self.filt.forward(P, x)
        a_g, cg = self.gate.forward(P, x)
        t, s, z = self.merge(a_f, a_g)
        r, cp = self.proj.forward(P, z)
        return x + r, (cf, cg, cp, t, s)

    def backward(self, P, cache, dy, G):
        cf, cg, cp, t, s = cache
        dz = self.proj.backward(P, cp, dy, G)
        da_f = dz * s * (1 - t**2)
        da_g = dz * t * s * (1 - s)
        return dy + self.filt.backward(P, cf, da_f, G) + self.gate.backward(P, cg, da_g, G)


def lstm_cell(x, h, c, Wx, Wh, b):
    """One LSTM step; gate order (input, forget, candidate, output)."""
    H = h.shape[-1]
    z = x @ Wx + h @ Wh + b
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new


class LSTM(Layer):
    """LSTM over ``(batch, time, features)`` with zero initial state.

    Backpropagation runs through the whole sequence. Returns the full hidden
    sequence or only the last hidden state.
    """

    def __init__(self, name: str, n_in: int, units: int, return_sequences: bool):
        self.name, self.n_in, self.units, self.return_sequences = name, n_in, units, return_sequences

    def param_shapes(self):
        H = self.units
        return [
            (f"{self.name}.Wx", (self.n_in, 4 * H)),
            (f"{self.name}.Wh", (H, 4 * H)),
            (f"{self.name}.b", (4 * H,)),
        ]

    def init(self, rng):
        H = self.units
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        return {
            f"{self.name}.Wx": fan_in_uniform(rng, (self.n_in, 4 * H), self.n_in),
            f"{self.name}.Wh": rng.uniform(-1 / np.sqrt(H), 1 / np.sqrt(H), (H, 4 * H)),
            f"{self.name}.b": b,
        }

    def forward(self, P, x, train=False, rng=None):
        Wx, Wh, b = P[f"{self.name}.Wx"], P[f"{self.name}.Wh"], P[f"{self.name}.b"]
        B, T, _ = x.shape
        H = self.units
        # sigmoid(z) = (1 + tanh(z/2)) / 2, so one tanh call covers all four gates
        half = np.full(4 * H, 0.5, dtype=x.dtype)
        half[2 * H:3 * H] = 1.0
        # time-major internally so per-step slices are contiguous
        zx = (np.swapaxes(x, 0, 1) @ Wx + b) * half
        Whs = Wh * half
        hs = np.zeros((T + 1, B, H), dtype=x.dtype)
        cs = np.zeros((T + 1, B, H), dtype=x.dtype)
        tcs = np.empty((T, B, H), dtype=x.dtype)
        gates = np.empty((T, B, 4 * H), dtype=x.dtype)
        for t in range(T):
            a = gates[t]
            np.tanh(zx[t] + hs[t] @ Whs, out=a)
            a[:, :2 * H] += 1.0
            a[:, :2 * H] *= 0.5
            a[:, 3 * H:] += 1.0
            a[:, 3 * H:] *= 0.5
            c = cs[t + 1]
            np.multiply(a[:, H:2 * H], cs[t], out=c)
            c += a[:, :H] * a[:, 2 * H:3 * H]
            np.tanh(c, out=tcs[t])
            np.multiply(a[:, 3 * H:], tcs[t], out=hs[t + 1])
        y = np.swapaxes(hs[1:], 0, 1) if self.return_sequences else hs[-1].copy()
        return y, (x, hs, cs, tcs, gates)

    def backward(self, P, cache, dy, G):
        Wx, Wh = P[f"{self.name}.Wx"], P[f"{self.name}.Wh"]
        x, hs, cs, tcs, gates = cache
        B, T, _ = x.shape
        H = self.units
        if self.return_sequences:
            dhs = np.swapaxes(dy, 0, 1)
        else:
            dhs = None
        dz_all = np.empty((T, B, 4 * H), dtype=gates.dtype)
        dh = np.zeros((B, H), dtype=gates.dtype) if dhs is not None else dy.astype(gates.dtype, copy=True)
        dc = np.zeros((B, H), dtype=gates.dtype)
        WhT = np.ascontiguousarray(Wh.T)
        for t in range(T - 1, -1, -1):
            a = gates[t]
            i, f, g, o = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
            tc = tcs[t]
            if dhs is not None:
                dh += dhs[t]
            dc += dh * o * (1 - tc * tc)
            dz = dz_all[t]
            np.multiply(dc * g, i * (1 - i), out=dz[:, :H])
            np.multiply(dc * cs[t], f * (1 - f), out=dz[:, H:2 * H])
            np.multiply(dc * i, 1 - g * g, out=dz[:, 2 * H:3 * H])
            np.multiply(dh * tc, o * (1 - o), out=dz[:, 3 * H:])
            dh = dz @ WhT
            dc *= f
        dz2 = dz_all.reshape(T * B, 4 * H)
        G[f"{self.name}.Wh"] += hs[:-1].reshape(T * B, H).T @ dz2
        G[f"{self.name}.Wx"] += np.swapaxes(x, 0, 1).reshape(T * B, -1).T @ dz2
        G[f"{self.name}.b"] += dz2.sum(axis=0)
        return np.swapaxes(dz_all @ Wx.T, 0, 1)


class Sequential:
    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)

    def param_shapes(self) -> list[tuple[str, Shape]]:
        return [ps for layer in self.layers for ps in layer.param_shapes()]

    def init(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        P: dict[str, np.ndarray] = {}
        for layer in self.layers:
            P.update(layer.init(rng))
        return P

    def forward(self, P, x, train=False, rng=None):
        caches = []
        for layer in self.layers:
            x, c = layer.forward(P, x, train, rng)
            caches.append(c)
        return x, caches

    def backward(self, P, caches, dy, G):
        for layer, c in zip(reversed(self.layers), reversed(caches)):
            dy = layer.backward(P, c, dy, G)
        return dy
