"""Command line entry point: synth, inject, train, detect, evaluate."""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from .anomaly import AnomalyKind, inject, load_truth, random_events, save_truth
from .bandsynth import DEFAULT_CARRIERS, BandConfig, BandKind, gen_band
from .detect import DetectionConfig, Statistics, calibrate_window_cfar, detect, statistic_stream
from .harness import (fit_detector, load_config, roc_sweep, run_experiment, summarize, write_results,
                      write_summary)
from .iq import make_rng, read_cf32, write_cf32
from .predict import Architecture, ModelSpec, TrainConfig, load_calibration, load_model, save_model

log = logging.getLogger("rfanomaly")


def cmd_synth(a: argparse.Namespace) -> int:
    kind = BandKind(a.kind)
    carriers = a.carriers if a.carriers is not None else DEFAULT_CARRIERS[kind]
    cfg = BandConfig(kind, a.samples, carriers, a.noise_floor_db, a.seed, a.layout_seed)
    write_cf32(gen_band(cfg), a.out)
    log.info("wrote %d samples of %s to %s", a.samples, kind.value, a.out)
    return 0


def cmd_inject(a: argparse.Namespace) -> int:
    band = read_cf32(getattr(a, "in"))
    rng = make_rng(a.seed)
    events = random_events(AnomalyKind(a.kind), a.count, a.len, a.ibr_db, len(band), rng)
    mixed, truth = inject(band, events, rng)
    write_cf32(mixed, a.out)
    save_truth(truth, a.truth)
    log.info("injected %d %s events at %g dB", len(truth), a.kind, a.ibr_db)
    return 0


def cmd_train(a: argparse.Namespace) -> int:
    overrides = {} if a.dropout is None else {"dropout": a.dropout}
    spec = ModelSpec.default(a.model, **overrides)
    tcfg = TrainConfig(epochs=a.epochs, batch_size=a.batch_size, learning_rate=a.lr, seed=a.seed,
                       max_windows=a.max_windows)
    band = read_cf32(a.band)
    t0 = time.perf_counter()
    fitted = fit_detector(spec, band, tcfg, DetectionConfig())
    for h in fitted.history:
        log.info("epoch %d train_mse %.5g val_mse %.5g", h["epoch"], h["train_mse"], h["val_mse"])
    save_model(a.out, fitted.model, fitted.errmodel, (fitted.clean_stats.index, fitted.clean_stats.value))
    log.info("trained %s in %.1f s, wrote %s", spec.architecture.value, time.perf_counter() - t0, a.out)
    return 0


def cmd_detect(a: argparse.Namespace) -> int:
    model, em = load_model(a.model)
    if em is None:
        log.error("%s has no error model", a.model)
        return 2
    cfg = DetectionConfig(V=a.V, merge_gap=a.merge_gap, W=a.W, target_pfa=a.pfa)
    if a.calibration:
        clean = statistic_stream(read_cf32(a.calibration), model, em, cfg)
    else:
        stored = load_calibration(a.model)
        if stored is None:
            log.error("%s has no calibration statistics; pass --calibration clean.cf32", a.model)
            return 2
        clean = Statistics(*stored)
    tau = calibrate_window_cfar(clean, a.pfa, cfg.W)
    truth = load_truth(a.truth) if a.truth else None
    meta = {"model": a.model, "band": a.band, "architecture": model.spec.architecture.value, "target_pfa": a.pfa}
    report = detect(read_cf32(a.band), model, em, tau, cfg, truth, meta)
    report.save(a.report)
    if a.stats_csv:
        report.save_stats_csv(a.stats_csv)
    msg = f"tau {tau:.4f}: {len(report.intervals)} intervals"
    if truth is not None:
        msg += f", pd {report.pd:.3f}, pfa {report.pfa:.3f}"
    log.info(msg)
    return 0


def cmd_evaluate(a: argparse.Namespace) -> int:
    cfg = load_config(a.config, quick=a.quick)
    t0 = time.perf_counter()
    rows = run_experiment(cfg, progress=lambda s: log.info("%s (%.0f s)", s, time.perf_counter() - t0))
    write_results(rows, a.out)
    if a.summary:
        write_summary(summarize(rows), a.summary)
    if a.roc:
        write_summary([p for pts in roc_sweep(rows).values() for p in pts], a.roc)
    failed = sum(1 for r in rows if np.isnan(r.pd))
    log.info("%d rows (%d failed) in %.1f s -> %s", len(rows), failed, time.perf_counter() - t0, a.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfanomaly", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a clean synthetic band")
    s.add_argument("--kind", choices=[k.value for k in BandKind], required=True)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--carriers", type=int)
    s.add_argument("--noise-floor-db", type=float, default=-30.0)
    s.add_argument("--layout-seed", type=int, default=0, help="station layout (carrier levels, slot occupancy)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("inject", help="add random anomaly events to a band")
    s.add_argument("--in", required=True)
    s.add_argument("--kind", choices=[k.value for k in AnomalyKind], required=True)
    s.add_argument("--count", type=int, default=50)
    s.add_argument("--len", type=int, default=250)
    s.add_argument("--ibr-db", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--truth", required=True)
    s.set_defaults(func=cmd_inject)

    s = sub.add_parser("train", help="fit a predictor and its error model on a clean band")
    s.add_argument("--band", required=True)
    s.add_argument("--model", choices=[a.value for a in Architecture], default="lstm")
    s.add_argument("--epochs", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--batch-size", type=int, default=128)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--dropout", type=float)
    s.add_argument("--max-windows", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("detect", help="flag anomalous intervals in a band")
    s.add_argument("--band", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--pfa", type=float, default=0.01)
    s.add_argument("--report", required=True)
    s.add_argument("--truth", help="ground-truth JSON; adds pd/pfa to the report")
    s.add_argument("--calibration", help="clean band to set the threshold on (default: stored statistics)")
    s.add_argument("--stats-csv", help="dump the statistic stream as index,value")
    s.add_argument("--V", type=int, default=8)
    s.add_argument("--merge-gap", type=int, default=64)
    s.add_argument("--W", type=int, default=250)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("evaluate", help="run an experiment grid from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--quick", action="store_true", help="20,000-sample bands and 3 trials")
    s.add_argument("--summary", help="per-cell mean/std CSV")
    s.add_argument("--roc", help="ROC table CSV (cells sorted by realized pfa)")
    s.set_defaults(func=cmd_evaluate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s",
                        stream=sys.stderr)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
