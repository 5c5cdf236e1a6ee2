"""Reconstruction-based anomaly detection for complex baseband RF bands.

A predictor learns to forecast the next 4 IQ samples from the previous 32 on
clean data. Prediction errors are scored under a Gaussian fitted on held-out
clean errors, and runs of unlikely errors are flagged as anomalies.
"""

from .anomaly import AnomalyEvent, AnomalyKind, inject, random_events
from .bandsynth import BandConfig, BandKind, gen_band
from .detect import DetectionConfig, DetectionReport, calibrate_cfar, extract_events, score_detections
from .errmodel import ErrorModel
from .iq import IQBuffer, read_cf32, write_cf32

__version__ = "0.1.0"

__all__ = [
    "AnomalyEvent", "AnomalyKind", "BandConfig", "BandKind", "DetectionConfig", "DetectionReport",
    "ErrorModel", "IQBuffer", "calibrate_cfar", "extract_events", "gen_band", "inject", "random_events",
    "read_cf32", "score_detections", "write_cf32",
]
