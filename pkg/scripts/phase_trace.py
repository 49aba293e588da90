#!/usr/bin/env python3
"""Trace one seeded fill insert-by-insert and print phase transitions.

Handy for eyeballing the growing-ceiling schedule: run e.g.

    python scripts/phase_trace.py --n 16384 --epsilon e^-6.5 --d-core 3
"""

import argparse
import math

from bubbleup.advanced import AdvancedPolicy
from bubbleup.harness import derive_seed
from bubbleup.hashing import HashOracle, key_stream
from bubbleup.params import derive_params
from bubbleup.table import Table


def parse_eps(text: str) -> float:
    if "^" in text:
        base, _, exp = text.partition("^")
        base = math.e if base.strip() == "e" else float(base)
        return base ** float(exp)
    return float(text)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2**14)
    ap.add_argument("--epsilon", type=parse_eps, default=math.exp(-6.5))
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--d-core", type=int, default=3, dest="d_core")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    params = derive_params(args.n, args.epsilon, args.alpha, args.d_core)
    print(
        f"n={params.n} d={params.d} gamma={params.gamma} "
        f"d_core={params.d_core} phases={params.final_phase}"
    )
    table = Table(params, HashOracle(derive_seed(args.seed, 1), params.n, params.d))
    policy = AdvancedPolicy(table, type1_seed=derive_seed(args.seed, 2))
    phase = policy.current_phase()
    print(f"phase 1: d_max={phase.d_max} ends at load {phase.phase_end_load:.6f}")
    for k in key_stream(derive_seed(args.seed, 3), params.max_load_count()):
        policy.insert_unique(k)
        now = policy.current_phase()
        if now.q != phase.q:
            m = table.metrics
            print(
                f"phase {now.q}: load {table.load:.6f} "
                f"ftp/n {m.first_time_probes_total / params.n:.3f} "
                f"-> d_max={now.d_max} ends at {now.phase_end_load:.6f}"
            )
            phase = now
    m = table.metrics
    print(
        f"done: load {table.load:.6f} ftp/n "
        f"{m.first_time_probes_total / params.n:.3f} "
        f"(n ln(1/eps)/n = {math.log(1 / params.epsilon):.3f}) "
        f"core {table.core_count() / params.n:.4f} "
        f"audit {'clean' if not table.audit() else 'VIOLATED'}"
    )


if __name__ == "__main__":
    main()
