"""Trained predictors with streaming prediction over a band; model files."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ..errmodel import ErrorModel
from ..iq import (N_INPUT, N_OUTPUT, IQBuffer, as_samples, complex_to_real, mean_power, real_to_complex,
                  window_arrays, window_starts)
from . import ukf
from .models import param_count
from .spec import Architecture, ModelSpec
from .train import batched_forward

MODEL_FORMAT = "rfanomaly-model"
MODEL_VERSION = 1


@dataclass
class NeuralPredictor:
    """Learned parameters plus the input scale applied before the network."""

    spec: ModelSpec
    theta: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != (param_count(self.spec),):
            raise ValueError("parameter vector does not match spec")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("non-finite parameters")

    @property
    def num_params(self) -> int:
        return self.theta.size

    def predict_windows(self, inputs: np.ndarray) -> np.ndarray:
        """(n, 32) complex inputs -> (n, 4) complex predictions."""
        y = batched_forward(self.spec, self.theta, complex_to_real(np.asarray(inputs) * self.scale))
        return real_to_complex(y) / self.scale

    def predict_stream(self, buf, stride: int = N_OUTPUT):
        X, Y, starts = window_arrays(buf, stride)
        return self.predict_windows(X), Y, starts


@dataclass
class UkfPredictor:
    """Online unscented Kalman predictor; nothing is learned offline."""

    spec: ModelSpec
    scale: float = 1.0

    @classmethod
    def fit(cls, spec: ModelSpec, band) -> "UkfPredictor":
        return cls(spec, 1.0 / np.sqrt(mean_power(band)))

    def initial_state(self) -> ukf.UkfState:
        s = self.spec
        return ukf.UkfState(process_noise=s.process_noise, alpha=s.sigma_alpha, beta=s.sigma_beta,
                            kappa=s.sigma_kappa, window=s.innovation_window)

    def predict_stream(self, buf, stride: int = N_OUTPUT):
        x = as_samples(buf)
        starts = window_starts(len(x), stride)
        preds = np.zeros((len(starts), N_OUTPUT), dtype=np.complex128)
        if len(starts):
            z = np.stack([x.real, x.imag], axis=1).astype(np.float64) * self.scale
            # forecast after observing sample k+N-1 for each window start k
            due = {int(k) + N_INPUT - 1: j for j, k in enumerate(starts)}
            state = self.initial_state()
            for i in range(int(starts[-1]) + N_INPUT):
                ukf.step_inplace(state, z[i])
                j = due.get(i)
                if j is not None:
                    preds[j] = ukf.forecast(state)
            preds /= self.scale
        targets = np.asarray(x)[starts[:, None] + N_INPUT + np.arange(N_OUTPUT)] if len(starts) else \
            np.zeros((0, N_OUTPUT), dtype=x.dtype)
        return preds, targets, starts


Predictor = NeuralPredictor | UkfPredictor


def predict_stream(model, buf: IQBuffer | np.ndarray, stride: int = N_OUTPUT):
    """Predictions, aligned true targets and window starts over ``buf``.

    ``model`` is anything with a ``predict_stream(buf, stride)`` method.
    """
    return model.predict_stream(buf, stride)


def error_vectors(model, buf, stride: int = N_OUTPUT) -> tuple[np.ndarray, np.ndarray]:
    """``(errors (n, 8) reals, starts)`` with error = actual - predicted."""
    preds, targets, starts = predict_stream(model, buf, stride)
    return complex_to_real(targets - preds), starts


def save_model(path: str | os.PathLike, model: Predictor, errmodel: ErrorModel | None = None,
               calibration: tuple[np.ndarray, np.ndarray] | None = None) -> None:
    """Write a self-describing npz model file.

    ``calibration`` optionally stores clean ``(index, value)`` statistics so a
    threshold can be set later without the training band.
    """
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": model.spec.to_dict(),
        "scale": float(model.scale),
        "num_params": int(model.theta.size) if isinstance(model, NeuralPredictor) else 0,
        "has_error_model": errmodel is not None,
        "has_calibration": calibration is not None,
    }
    arrays = {"header": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)}
    arrays["theta"] = model.theta.astype("<f8") if isinstance(model, NeuralPredictor) else np.zeros(0, "<f8")
    if errmodel is not None:
        arrays.update({k: np.asarray(v, dtype="<f8") for k, v in errmodel.to_arrays().items()})
    if calibration is not None:
        arrays["cal_index"] = np.asarray(calibration[0], dtype="<i8")
        arrays["cal_value"] = np.asarray(calibration[1], dtype="<f8")
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path: str | os.PathLike) -> tuple[Predictor, ErrorModel | None]:
    with np.load(path) as z:
        header = json.loads(z["header"].tobytes().decode())
        if header.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path} is not a model file")
        if header.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {header.get('version')}")
        spec = ModelSpec.from_dict(header["spec"])
        if spec.architecture is Architecture.UKF3:
            model: Predictor = UkfPredictor(spec, header["scale"])
        else:
            model = NeuralPredictor(spec, z["theta"].astype(np.float64), header["scale"])
        em = ErrorModel.from_arrays(z) if header["has_error_model"] else None
    return model, em


def load_calibration(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray] | None:
    """Clean ``(index, value)`` statistics stored with a model, if any."""
    with np.load(path) as z:
        if "cal_value" not in z.files:
            return None
        return z["cal_index"].astype(np.int64), z["cal_value"].astype(np.float64)
