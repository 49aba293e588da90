#!/usr/bin/env python3
"""Run the headline experiments and drop one CSV per experiment in out/.

Sizes here are moderate so the whole script finishes in a few minutes;
see tests/test_acceptance.py for the full-scale statistical gates.
"""

import pathlib
import sys

from bubbleup.harness import ExperimentConfig, run

OUT = pathlib.Path(__file__).resolve().parent.parent / "out"

EXPERIMENTS = [
    ExperimentConfig(
        experiment="fill", n=2**16, epsilon=2**-6, alpha=1.0, d_core=5,
        seed=1, seeds=3, csv_out=str(OUT / "fill.csv"),
    ),
    ExperimentConfig(
        experiment="insert-sweep", n=2**16, epsilon=2**-8, alpha=1.0, d_core=5,
        seed=1, seeds=3, csv_out=str(OUT / "insert_sweep.csv"),
    ),
    ExperimentConfig(
        experiment="query-dist", n=2**16, epsilon=2**-8, alpha=1.0, d_core=4,
        seed=1, csv_out=str(OUT / "query_dist.csv"),
    ),
    ExperimentConfig(
        experiment="core-occupancy", n=2**16, epsilon=2**-6, alpha=1.0,
        d_core=5, seed=1, seeds=3, csv_out=str(OUT / "core_occupancy.csv"),
    ),
    ExperimentConfig(
        experiment="coupon-check", n=10**6, epsilon=1 / 16, seed=1, seeds=10,
        csv_out=str(OUT / "coupon_check.csv"),
    ),
    ExperimentConfig(
        experiment="failure-rate", n=2**16, epsilon=2**-6, alpha=1.0,
        d_core=5, seed=1, seeds=20, audit=False,
        csv_out=str(OUT / "failure_rate.csv"),
    ),
    ExperimentConfig(
        experiment="churn", n=2**14, epsilon=2**-9, alpha=1.0, d_core=5,
        seed=1, churn_ops=50_000, churn_load=1 - 2**-4,
        csv_out=str(OUT / "churn.csv"),
    ),
    ExperimentConfig(
        experiment="feasibility-audit", seed=1,
        csv_out=str(OUT / "feasibility_audit.csv"),
    ),
]


def main() -> int:
    OUT.mkdir(exist_ok=True)
    worst = 0
    for cfg in EXPERIMENTS:
        result = run(cfg)
        status = "ok" if result.exit_code == 0 else "FAILED"
        print(f"{cfg.experiment:>18}: {len(result.rows):4d} rows -> {cfg.csv_out} [{status}]")
        worst = max(worst, result.exit_code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
