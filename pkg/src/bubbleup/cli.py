"""Command-line entry point for the experiment harness.

Example:

    bubbleup --experiment fill --n 65536 --epsilon 2^-6 --alpha 1 \
             --d-core 5 --seed 1 --csv-out fill.csv

Epsilon accepts either a decimal ("0.015625") or a dyadic power ("2^-6").
Exit status is 0 on success and 1 when any run hit an unrecovered failure.
"""

from __future__ import annotations

import argparse
import sys

from .harness import EXPERIMENTS, ConfigError, ExperimentConfig, run


def parse_epsilon(text: str) -> float:
    """Parse '2^-k' or a plain decimal into a float in (0, 1)."""
    text = text.strip()
    if "^" in text:
        base_s, _, exp_s = text.partition("^")
        value = float(base_s) ** float(exp_s)
    else:
        value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"epsilon must be in (0, 1), got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bubbleup",
        description="Run seeded cuckoo-hashing experiments and emit CSV metrics.",
    )
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    p.add_argument("--n", type=int, default=2**16, help="number of slots")
    p.add_argument(
        "--epsilon",
        type=parse_epsilon,
        default=2**-6,
        help="free-slot fraction at max load; accepts 2^-k or decimal",
    )
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--d-core", type=int, default=5, dest="d_core")
    p.add_argument("--seed", type=int, default=1, help="base seed (decimal 64-bit)")
    p.add_argument("--seeds", type=int, default=1, help="number of seeded repeats")
    p.add_argument("--algorithm", choices=("basic", "advanced"), default="advanced")
    p.add_argument("--choice-mode", choices=("stored", "recomputed"), default="stored")
    p.add_argument("--enable-deletions", action="store_true")
    p.add_argument("--csv-out", default=None)
    p.add_argument("--failure-c1", type=float, default=8.0)
    p.add_argument("--failure-c2", type=float, default=12.0)
    p.add_argument(
        "--no-audit",
        action="store_true",
        help="skip the full-table matching audit at the end of each run",
    )
    p.add_argument("--churn-ops", type=int, default=100_000)
    p.add_argument("--churn-load", type=parse_epsilon, default=1.0 - 2**-4)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = ExperimentConfig(
        experiment=args.experiment,
        n=args.n,
        epsilon=args.epsilon,
        alpha=args.alpha,
        d_core=args.d_core,
        seed=args.seed,
        seeds=args.seeds,
        algorithm=args.algorithm,
        choice_mode=args.choice_mode,
        enable_deletions=args.enable_deletions,
        csv_out=args.csv_out,
        failure_c1=args.failure_c1,
        failure_c2=args.failure_c2,
        audit=not args.no_audit,
        churn_ops=args.churn_ops,
        churn_load=args.churn_load,
    )
    try:
        result = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if result.csv_path:
        print(f"wrote {len(result.rows)} rows to {result.csv_path}")
    else:
        for row in result.rows:
            print(",".join(row.values()))
    if result.exit_code:
        print("run finished with unrecovered failures", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
