#!/usr/bin/env python3
"""Train each predictor on one clean band and compare one-step prediction error.

Reports error on a second capture for every architecture next to repeating
the last sample,
plus the clean-band detection statistic spread, without injecting anything.

    python scripts/compare_models.py --band tdma --samples 50000
"""

import argparse
import time

import numpy as np

from rfanomaly.bandsynth import BandConfig, BandKind, gen_band
from rfanomaly.detect import DetectionConfig
from rfanomaly.harness import fit_detector
from rfanomaly.iq import mean_power, window_arrays
from rfanomaly.predict import Architecture, ModelSpec, TrainConfig

SETTLE = 256  # windows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--band", choices=[k.value for k in BandKind], default="fm")
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--max-windows", type=int, default=6000)
    ap.add_argument("--models", nargs="+", default=[a.value for a in Architecture])
    a = ap.parse_args()

    band = gen_band(BandConfig(BandKind(a.band), a.samples, seed=a.seed))
    test = gen_band(BandConfig(BandKind(a.band), a.samples, seed=a.seed + 1))
    x = test.samples.astype(complex)
    power = mean_power(x)
    tcfg = TrainConfig(epochs=a.epochs, max_windows=a.max_windows, seed=a.seed)

    print(f"{a.band} band, {a.samples} samples, power {power:.3f}")
    X, Y, _ = window_arrays(x, 4)
    persist = np.mean(np.abs(Y[SETTLE:] - X[SETTLE:, -1:]) ** 2) / power
    print(f"{'persistence':12s} nmse {persist:.4f}")
    for name in a.models:
        t0 = time.perf_counter()
        fitted = fit_detector(ModelSpec.default(name), band, tcfg, DetectionConfig())
        pred, target, _ = fitted.model.predict_stream(test)
        # skip the filter's start-up transient so every model is scored in steady state
        nmse = float(np.mean(np.abs(pred[SETTLE:] - target[SETTLE:]) ** 2) / power)
        s = fitted.clean_stats.value
        print(f"{name:12s} nmse {nmse:.4f}  clean statistic median {np.median(s):8.2f} "
              f"1% {np.quantile(s, 0.01):8.2f}  ({time.perf_counter() - t0:.0f} s)")


if __name__ == "__main__":
    main()
