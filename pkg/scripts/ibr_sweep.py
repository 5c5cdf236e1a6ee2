#!/usr/bin/env python3
"""Run an experiment config and print mean pd per IBR, one table per cell.

    python scripts/ibr_sweep.py configs/fm_lstm.toml --out sweep.csv
"""

import argparse
import logging
import time
from collections import defaultdict

from rfanomaly.harness import load_config, run_experiment, summarize, write_results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--out", help="also write the per-trial results CSV")
    ap.add_argument("--quick", action="store_true")
    a = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    cfg = load_config(a.config, quick=a.quick)
    t0 = time.perf_counter()
    rows = run_experiment(cfg, progress=lambda s: print(f"[{time.perf_counter() - t0:6.0f} s] {s}", flush=True))
    if a.out:
        write_results(rows, a.out)

    table = defaultdict(dict)
    for p in summarize(rows):
        table[(p.band, p.model, p.anomaly, p.target_pfa)][p.ibr_db] = p
    ibrs = sorted(cfg.ibr_grid)
    print()
    print(f"{'band':8s} {'model':7s} {'anomaly':12s} {'pfa*':>6s} " + " ".join(f"{x:>7g}" for x in ibrs) + "  realized pfa")
    for (band, model, anomaly, target), cells in sorted(table.items()):
        pds = " ".join(f"{cells[x].pd:7.3f}" for x in ibrs)
        pfa = sum(c.pfa for c in cells.values()) / len(cells)
        print(f"{band:8s} {model:7s} {anomaly:12s} {target:6g} {pds}  {pfa:.4f}")


if __name__ == "__main__":
    main()
