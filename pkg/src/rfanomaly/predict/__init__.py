"""Sequence predictors: 32 complex samples in, the next 4 out."""

from .models import ShapeError, forward, init_params, loss_and_grad, param_count, param_layout
from .spec import Architecture, ModelSpec, Optimizer, TrainConfig
from .stream import (NeuralPredictor, UkfPredictor, error_vectors, load_calibration, load_model, predict_stream,
                     save_model)
from .train import train
from .ukf import UkfState, ukf_step

__all__ = [
    "Architecture", "ModelSpec", "NeuralPredictor", "Optimizer", "ShapeError", "TrainConfig",
    "UkfPredictor", "UkfState", "error_vectors", "forward", "load_calibration", "init_params", "load_model",
    "loss_and_grad", "param_count", "param_layout", "predict_stream", "save_model", "train", "ukf_step",
]
