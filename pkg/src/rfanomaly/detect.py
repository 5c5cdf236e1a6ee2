"""Detection statistic over a band, CFAR thresholds, event extraction and scoring."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .anomaly import AnomalyEvent
from .errmodel import ErrorModel, aggregate
from .iq import N_INPUT, N_OUTPUT, WINDOW, as_samples
from .predict.stream import error_vectors


@dataclass(frozen=True)
class DetectionConfig:
    V: int = 8
    merge_gap: int = 64
    W: int = 250
    target_pfa: float = 0.01
    stride: int = N_OUTPUT

    def __post_init__(self):
        if self.V < 1 or self.W < 1 or self.stride < 1:
            raise ValueError("V, W and stride must be >= 1")
        if self.merge_gap < 0:
            raise ValueError("merge_gap must be >= 0")
        if not 0 < self.target_pfa < 1:
            raise ValueError("target_pfa must be in (0, 1)")


class Statistics(NamedTuple):
    """Aggregated log-likelihood values and the sample index each is centered on."""

    index: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.value)


def stats_from_errors(errors: np.ndarray, starts: np.ndarray, errmodel: ErrorModel, V: int) -> Statistics:
    values = aggregate(errmodel.log_pdf(errors), V)
    n = len(values)
    span_start = starts[:n] + N_INPUT
    span_end = starts[V - 1:V - 1 + n] + WINDOW
    return Statistics((span_start + span_end) // 2, values)


def statistic_stream(band, model, errmodel: ErrorModel, cfg: DetectionConfig = DetectionConfig()) -> Statistics:
    """Predict over ``band``, score each error vector, aggregate V windows at a time."""
    n = len(as_samples(band))
    need = WINDOW + cfg.stride * (cfg.V - 1)
    if n < need:
        raise ValueError(f"band of {n} samples is shorter than the {need} needed for one statistic")
    errors, starts = error_vectors(model, band, cfg.stride)
    return stats_from_errors(errors, starts, errmodel, cfg.V)


def calibrate_cfar(clean_stats: Sequence[float], target_pfa: float) -> float:
    """Lower-tail empirical quantile of clean statistics (linear interpolation).

    An alarm is raised where the statistic falls below the returned threshold.
    """
    s = np.asarray(clean_stats, dtype=np.float64)
    if s.size < 100:
        raise ValueError(f"need at least 100 clean statistics, got {s.size}")
    if not 0 < target_pfa < 1:
        raise ValueError("target_pfa must be in (0, 1)")
    return float(np.quantile(s, target_pfa, method="linear"))


def window_minima(stats: Statistics, W: int) -> np.ndarray:
    """Minimum statistic over every run of consecutive points spanning ~W samples.

    A W-sample scoring tile raises a false alarm exactly when its minimum is
    below threshold, so quantiles of these minima calibrate window-level Pfa.
    """
    if len(stats) < 2:
        return np.asarray(stats.value, dtype=np.float64)
    step = int(np.median(np.diff(stats.index)))
    m = max(1, W // max(step, 1))
    if m >= len(stats):
        return np.array([stats.value.min()])
    return np.lib.stride_tricks.sliding_window_view(stats.value, m).min(axis=1)


def calibrate_window_cfar(clean: Statistics | Sequence[Statistics], target_pfa: float, W: int) -> float:
    """Threshold giving ``target_pfa`` false alarms per W-sample tile on clean data.

    Several clean streams (e.g. from distinct band realizations) are pooled.
    """
    streams = [clean] if isinstance(clean, Statistics) else list(clean)
    return calibrate_cfar(np.concatenate([window_minima(s, W) for s in streams]), target_pfa)


def extract_events(stats: Statistics, tau: float, merge_gap: int) -> list[tuple[int, int]]:
    """Half-open intervals of alarm points (value < tau).

    Alarm points next to each other in the stream form one run. Runs are
    merged when the hole between them is at most ``merge_gap`` samples.
    """
    index = np.asarray(stats.index)
    if np.any(np.diff(index) <= 0):
        raise ValueError("statistics must be sorted by index")
    pos = np.flatnonzero(np.asarray(stats.value) < tau)
    if pos.size == 0:
        return []
    idx = index[pos]
    joined = (np.diff(pos) == 1) | (np.diff(idx) - 1 <= merge_gap)
    breaks = np.flatnonzero(~joined)
    first = np.concatenate([[0], breaks + 1])
    last = np.concatenate([breaks, [idx.size - 1]])
    return [(int(idx[a]), int(idx[b]) + 1) for a, b in zip(first, last)]


def _interval(e) -> tuple[int, int]:
    if isinstance(e, AnomalyEvent):
        return e.t_start, e.t_end
    return int(e[0]), int(e[1])


def _overlaps(a0: int, a1: int, intervals: np.ndarray) -> bool:
    if len(intervals) == 0:
        return False
    return bool(np.any((intervals[:, 0] < a1) & (intervals[:, 1] > a0)))


def clean_tiles(truth, band_len: int, W: int) -> np.ndarray:
    """(k, 2) array of W-sample tiles on the fixed grid away from every truth.

    Tiles are ``[jW, (j+1)W)`` for full tiles only; a tile is clean when it does
    not touch any truth support widened by W on both sides.
    """
    n = band_len // W
    tiles = np.stack([np.arange(n) * W, (np.arange(n) + 1) * W], axis=1)
    if len(truth) == 0:
        return tiles
    padded = np.array([(s - W, e + W) for s, e in map(_interval, truth)])
    keep = [not _overlaps(a, b, padded) for a, b in tiles]
    return tiles[np.array(keep, dtype=bool)]


def score_detections(detected, truth, band_len: int, W: int) -> tuple[float, float]:
    """``(pd, pfa)``: fraction of truths overlapped; fraction of clean tiles struck.

    With no truth events pd is 1.0 by convention.
    """
    det = np.array([_interval(d) for d in detected], dtype=np.int64).reshape(-1, 2)
    tr = [_interval(t) for t in truth]
    pd = 1.0 if not tr else sum(_overlaps(s, e, det) for s, e in tr) / len(tr)
    tiles = clean_tiles(tr, band_len, W)
    if len(tiles) == 0:
        return float(pd), 0.0
    struck = sum(_overlaps(a, b, det) for a, b in tiles)
    return float(pd), struck / len(tiles)


@dataclass
class DetectionReport:
    stats: Statistics
    tau: float
    intervals: list[tuple[int, int]]
    pd: float | None = None
    pfa: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self, include_stats: bool = False) -> dict:
        d = {
            "tau": self.tau,
            "intervals": [list(iv) for iv in self.intervals],
            "pd": self.pd,
            "pfa": self.pfa,
            "num_statistics": len(self.stats),
            "metadata": self.metadata,
        }
        if include_stats:
            d["statistics"] = {"index": self.stats.index.tolist(), "value": self.stats.value.tolist()}
        return d

    def save(self, path: str | os.PathLike, include_stats: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(include_stats), fh, indent=1)

    def save_stats_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            fh.write("index,value\n")
            for i, v in zip(self.stats.index, self.stats.value):
                fh.write(f"{int(i)},{float(v)!r}\n")


def detect(band, model, errmodel: ErrorModel, tau: float, cfg: DetectionConfig = DetectionConfig(),
           truth=None, metadata: dict | None = None) -> DetectionReport:
    stats = statistic_stream(band, model, errmodel, cfg)
    intervals = extract_events(stats, tau, cfg.merge_gap)
    pd = pfa = None
    if truth is not None:
        pd, pfa = score_detections(intervals, truth, len(as_samples(band)), cfg.W)
    return DetectionReport(stats, tau, intervals, pd, pfa, dict(metadata or {}))
