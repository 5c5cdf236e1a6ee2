"""End-to-end experiments: train, calibrate, inject, detect, score.

Seeds: every random draw in a run is keyed off ``master_seed`` with
:func:`rfanomaly.iq.derive_seed` and a tuple naming its purpose, e.g.
``(master, "band", band_index, trial)`` followed by a purpose tag. Each trial
draws one station layout and separate train, calibration and eval captures of
it. Band realizations depend only on the band index and trial, so every model
in a trial sees the same bands and the same injected events.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable

import numpy as np

from .anomaly import AnomalyKind, inject, random_events
from .bandsynth import DEFAULT_CARRIERS, BandConfig, BandKind, gen_band
from .detect import (DetectionConfig, Statistics, calibrate_window_cfar, extract_events, score_detections,
                     stats_from_errors, statistic_stream)
from .errmodel import ErrorModel, fit as fit_errors
from .iq import N_OUTPUT, derive_seed, make_rng
from .predict.spec import ModelSpec, TrainConfig
from .predict.stream import UkfPredictor, error_vectors
from .predict.train import make_dataset, train

log = logging.getLogger(__name__)

RESULTS_VERSION = 1
RESULT_COLUMNS = ["band", "model", "anomaly", "ibr_db", "target_pfa", "pd", "pfa", "tau", "seed", "wall_ms"]


@dataclass
class FittedDetector:
    model: object
    errmodel: ErrorModel
    clean_stats: Statistics
    history: list = field(default_factory=list)


def fit_detector(spec: ModelSpec, band, train_cfg: TrainConfig, det_cfg: DetectionConfig) -> FittedDetector:
    """Train (or set up) a predictor on a clean band and fit its error model.

    The error model and the clean statistic sample come from the held-out tail
    of the band (the validation split), predicted at the detection stride.
    """
    history: list = []
    if spec.is_neural:
        model, history = train(spec, band, train_cfg)
    else:
        model = UkfPredictor.fit(spec, band)
    samples = band.samples if hasattr(band, "samples") else np.asarray(band)
    val_start = make_dataset(samples, train_cfg).val_start
    if spec.is_neural:
        errors, starts = error_vectors(model, samples[val_start:], det_cfg.stride)
        starts = starts + val_start
    else:
        # the filter runs over the whole band so it is settled by the tail
        errors, starts = error_vectors(model, samples, det_cfg.stride)
        keep = starts >= val_start
        errors, starts = errors[keep], starts[keep]
    em = fit_errors(errors)
    return FittedDetector(model, em, stats_from_errors(errors, starts, em, det_cfg.V), history)


Fitter = Callable[[ModelSpec, object, TrainConfig, DetectionConfig], FittedDetector]


@dataclass(frozen=True)
class ExperimentConfig:
    bands: tuple[BandConfig, ...] = (BandConfig(),)
    models: tuple[ModelSpec, ...] = (ModelSpec.default("lstm"),)
    anomalies: tuple[AnomalyKind, ...] = (AnomalyKind.TONE,)
    ibr_grid: tuple[float, ...] = (-15.0, -10.0, -5.0, 0.0, 5.0)
    events_per_trial: int = 50
    event_length: int = 250
    trials: int = 5
    target_pfas: tuple[float, ...] = (0.001, 0.01, 0.05, 0.1)
    master_seed: int = 0
    calibration_bands: int = 2
    train: TrainConfig = TrainConfig()
    detection: DetectionConfig = DetectionConfig()

    def __post_init__(self):
        for name in ("bands", "models", "anomalies", "ibr_grid", "target_pfas"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must not be empty")
        if self.trials < 1 or self.calibration_bands < 1:
            raise ValueError("trials and calibration_bands must be >= 1")
        if self.events_per_trial < 0 or self.event_length < 1:
            raise ValueError("bad event count or length")
        object.__setattr__(self, "anomalies", tuple(AnomalyKind(a) for a in self.anomalies))


@dataclass
class ResultRow:
    band: str
    model: str
    anomaly: str
    ibr_db: float
    target_pfa: float
    pd: float
    pfa: float
    tau: float
    seed: int
    wall_ms: float
    trial: int = 0

    def key(self) -> tuple:
        return (self.band, self.model, self.anomaly, self.ibr_db, self.target_pfa, self.trial)

    def as_csv(self) -> dict:
        return {c: getattr(self, c) for c in RESULT_COLUMNS}


def _label(i: int, name: str, items: list) -> str:
    # disambiguate repeated kinds/architectures by position
    same = [x for x in items if x == name]
    return name if len(same) == 1 else f"{name}#{i}"


def run_trial(cfg: ExperimentConfig, band_i: int, model_i: int, trial: int,
              fitter: Fitter = fit_detector) -> list[ResultRow]:
    # one station layout per trial, shared by its train, calibration and eval captures
    seed = derive_seed(cfg.master_seed, "band", band_i, trial)
    band_cfg = replace(cfg.bands[band_i], layout_seed=derive_seed(seed, "layout", cfg.bands[band_i].layout_seed))
    spec = cfg.models[model_i]
    band_names = [b.kind.value for b in cfg.bands]
    model_names = [m.architecture.value for m in cfg.models]
    band_label = _label(band_i, band_cfg.kind.value, band_names)
    model_label = _label(model_i, spec.architecture.value, model_names)
    det = cfg.detection

    def fail_rows(exc: Exception) -> list[ResultRow]:
        log.error("trial failed (%s/%s trial %d): %s", band_label, model_label, trial, exc)
        return [ResultRow(band_label, model_label, k.value, float(ibr), float(p), math.nan, math.nan, math.nan,
                          seed, 0.0, trial)
                for k in cfg.anomalies for ibr in cfg.ibr_grid for p in cfg.target_pfas]

    try:
        t0 = time.perf_counter()
        train_band = gen_band(band_cfg.with_seed(derive_seed(seed, "train")))
        tcfg = replace(cfg.train, seed=derive_seed(seed, "fit", model_i))
        fitted = fitter(spec, train_band, tcfg, det)
        cal = [statistic_stream(gen_band(band_cfg.with_seed(derive_seed(seed, "calibrate", c))), fitted.model,
                                fitted.errmodel, det) for c in range(cfg.calibration_bands)]
        taus = {p: calibrate_window_cfar(cal, p, det.W) for p in cfg.target_pfas}
        eval_band = gen_band(band_cfg.with_seed(derive_seed(seed, "eval")))
        setup_ms = (time.perf_counter() - t0) * 1e3
    except Exception as exc:  # a failed cell is recorded, the run continues
        return fail_rows(exc)

    rows = []
    n_cells = len(cfg.anomalies) * len(cfg.ibr_grid)
    for kind in cfg.anomalies:
        ev_seed = derive_seed(seed, "events", kind.value)
        for ibr in cfg.ibr_grid:
            t1 = time.perf_counter()
            # same placements and parameters at every IBR
            rng = make_rng(ev_seed)
            events = random_events(kind, cfg.events_per_trial, cfg.event_length, float(ibr), len(eval_band), rng)
            mixed, truth = inject(eval_band, events, rng)
            stats = statistic_stream(mixed, fitted.model, fitted.errmodel, det)
            wall = (time.perf_counter() - t1) * 1e3 + setup_ms / n_cells
            for p in cfg.target_pfas:
                intervals = extract_events(stats, taus[p], det.merge_gap)
                pd, pfa = score_detections(intervals, truth, len(mixed), det.W)
                rows.append(ResultRow(band_label, model_label, kind.value, float(ibr), float(p), pd, pfa,
                                      taus[p], seed, round(wall, 3), trial))
    return rows


def run_experiment(cfg: ExperimentConfig, fitter: Fitter = fit_detector,
                   progress: Callable[[str], None] | None = None) -> list[ResultRow]:
    rows: list[ResultRow] = []
    for b in range(len(cfg.bands)):
        for m in range(len(cfg.models)):
            for t in range(cfg.trials):
                if progress:
                    progress(f"band {cfg.bands[b].kind.value} model {cfg.models[m].architecture.value} trial {t}")
                rows.extend(run_trial(cfg, b, m, t, fitter))
    rows.sort(key=ResultRow.key)
    return rows


@dataclass(frozen=True)
class RocPoint:
    band: str
    model: str
    anomaly: str
    ibr_db: float
    target_pfa: float
    pfa: float
    pd: float
    pd_std: float
    trials: int


def summarize(rows: Iterable[ResultRow]) -> list[RocPoint]:
    """Mean pd/pfa over trials for each (cell, target_pfa); failed trials are skipped."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.band, r.model, r.anomaly, r.ibr_db, r.target_pfa), []).append(r)
    out = []
    for k in sorted(groups):
        ok = [r for r in groups[k] if not math.isnan(r.pd)]
        pd = np.array([r.pd for r in ok])
        pfa = np.array([r.pfa for r in ok])
        out.append(RocPoint(*k, float(pfa.mean()) if ok else math.nan, float(pd.mean()) if ok else math.nan,
                            float(pd.std()) if ok else math.nan, len(ok)))
    return out


def roc_sweep(rows: Iterable[ResultRow]) -> dict[tuple, list[RocPoint]]:
    """ROC table per (band, model, anomaly, ibr) cell, sorted by realized pfa.

    Needs at least two target pfa values per cell.
    """
    table: dict[tuple, list[RocPoint]] = {}
    for p in summarize(rows):
        table.setdefault((p.band, p.model, p.anomaly, p.ibr_db), []).append(p)
    for cell, pts in table.items():
        if len(pts) < 2:
            raise ValueError(f"an ROC table needs at least 2 target pfa values, cell {cell} has {len(pts)}")
        pts.sort(key=lambda p: (p.pfa, p.target_pfa))
    return table


def write_results(rows: Iterable[ResultRow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# rfanomaly results v{RESULTS_VERSION}\n")
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(r.as_csv())


def read_results(path: str | os.PathLike) -> list[ResultRow]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    for d in csv.DictReader(lines):
        out.append(ResultRow(d["band"], d["model"], d["anomaly"], float(d["ibr_db"]), float(d["target_pfa"]),
                             float(d["pd"]), float(d["pfa"]), float(d["tau"]), int(d["seed"]), float(d["wall_ms"])))
    return out


def write_summary(points: Iterable[RocPoint], path: str | os.PathLike) -> None:
    cols = [f.name for f in fields(RocPoint)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for p in points:
            w.writerow([getattr(p, c) for c in cols])


# ------------------------------------------------------------------- config

QUICK_SAMPLES = 20_000
QUICK_TRIALS = 3
QUICK_EVENTS = 20  # at most this many events fit comfortably in a quick band


def config_from_dict(d: dict, quick: bool = False) -> ExperimentConfig:
    """Build a config from parsed TOML (see ``configs/`` for the layout).

    ``quick`` (or ``profile = "quick"`` in the file) forces 20,000-sample bands,
    3 trials and at most 20 events per trial.
    """
    quick = quick or d.get("profile", "full") == "quick"
    bands = []
    for b in d.get("band", [{"kind": "fm"}]):
        kind = BandKind(b["kind"])
        n = QUICK_SAMPLES if quick else b.get("num_samples", 100_000)
        bands.append(BandConfig(kind, int(n), int(b.get("num_carriers", DEFAULT_CARRIERS[kind])),
                                float(b.get("noise_floor_db", -30.0)), layout_seed=int(b.get("layout_seed", 0))))
    models = []
    for m in d.get("model", [{"architecture": "lstm"}]):
        m = dict(m)
        models.append(ModelSpec.default(m.pop("architecture"), **m))
    train_cfg = TrainConfig(**d.get("train", {}))
    det = DetectionConfig(**{"target_pfa": 0.01, **d.get("detection", {})})
    trials = QUICK_TRIALS if quick else d.get("trials", 5)
    events = int(d.get("events_per_trial", 50))
    if quick:
        events = min(events, QUICK_EVENTS)
    return ExperimentConfig(
        bands=tuple(bands),
        models=tuple(models),
        anomalies=tuple(d.get("anomalies", ["tone"])),
        ibr_grid=tuple(float(x) for x in d.get("ibr_grid", (-15, -10, -5, 0, 5))),
        events_per_trial=events,
        event_length=int(d.get("event_length", 250)),
        trials=int(trials),
        target_pfas=tuple(float(x) for x in d.get("target_pfa", (0.001, 0.01, 0.05, 0.1))),
        master_seed=int(d.get("master_seed", 0)),
        calibration_bands=int(d.get("calibration_bands", 2)),
        train=train_cfg,
        detection=det,
    )


def load_config(path: str | os.PathLike, quick: bool = False) -> ExperimentConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh), quick)


__all__ = [
    "ExperimentConfig", "FittedDetector", "ResultRow", "RocPoint", "fit_detector", "load_config",
    "config_from_dict", "read_results", "roc_sweep", "run_experiment", "run_trial", "summarize",
    "write_results", "write_summary", "N_OUTPUT",
]
