"""Run the shipped k-sweep configs and write their CSVs.

Each config produces ``records.csv`` and ``summary.csv`` under its
``output_path`` (relative to the working directory). The summaries hold CE,
AMRP and EARP against k for every estimator, ready for any plotting tool.

    python scripts/figure_sweeps.py                 # all four models
    python scripts/figure_sweeps.py exp unifsq      # a subset
    python scripts/figure_sweeps.py --replications 20 --workers 4
"""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from refprior.experiments import k_sweep, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("models", nargs="*", default=["exp", "unif0", "unifsq", "triangular"])
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out", help="parent directory for the per-model outputs")
    args = p.parse_args()

    for name in args.models:
        cfg = load_config(CONFIGS / f"{name}_sweep.cfg")
        cfg = replace(cfg, workers=args.workers, output_path=str(Path(args.out) / f"{name}_sweep"))
        if args.replications:
            cfg = replace(cfg, replications=args.replications)
        t = time.perf_counter()
        summary = k_sweep(cfg)
        print(f"{name}: {len(summary.rows)} summary rows -> {cfg.output_path} ({time.perf_counter() - t:.1f}s)")
        for row in summary.rows:
            if row.k == max(cfg.k_values):
                print(f"  k={row.k:<3} {row.estimator:<4} CE={row.CE:.3f} AMRP={row.AMRP:.3f} EARP={row.EARP:.3f}")


if __name__ == "__main__":
    main()
