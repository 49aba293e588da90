"""Reproducible experiment runner with CSV emission.

Every experiment is driven by an ``ExperimentConfig`` and a base seed; all
randomness (oracle, eviction choices, workload keys, churn decisions) is
derived from that seed, so identical configs produce byte-identical CSV
apart from the wall-time column (the last one).

CSV schema, one row per (seed, snapshot point):

  experiment            experiment name
  seed                  per-run seed
  phase, d_max          phase index and hash ceiling at the snapshot
  load                  augmented load factor
  live_count            live (non-tombstone) elements
  ftp_total/core/noncore   cumulative first-time probes, split by whether
                        the probed index was in the core range at probe time
  moves_type1..4        cumulative move counts (types 3/4 are basic-only)
  chain_mean, chain_max eviction-chain length statistics
  core_count            elements placed under core-range indices
  band_delta            dyadic band label (insert-sweep rows only)
  insert_probes_mean    mean first-time probes per insertion in the band
  query_probes_mean/p50/p99   positive-query probe statistics (query-dist)
  failures              insertion failures so far
  rebuilds              rebuilds so far (churn only)
  wall_time_s           elapsed seconds; NOT deterministic
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .advanced import AdvancedPolicy
from .basic import BasicPolicy
from .deletion import DeletionManager
from .hashing import HashOracle, SplitMix, derive_seed, key_stream
from .oracles import (
    BipartiteInstance,
    coupon_trial,
    exhaustive_feasible,
    instance_from_oracle,
    offline_feasible,
)
from .params import Mode, ParamSet, RangeError, derive_params
from .table import InsertStatus, Metrics, Table

EXPERIMENTS = (
    "fill",
    "insert-sweep",
    "query-dist",
    "core-occupancy",
    "coupon-check",
    "failure-rate",
    "churn",
    "feasibility-audit",
)

CSV_COLUMNS = (
    "experiment",
    "seed",
    "phase",
    "d_max",
    "load",
    "live_count",
    "ftp_total",
    "ftp_core",
    "ftp_noncore",
    "moves_type1",
    "moves_type2",
    "moves_type3",
    "moves_type4",
    "chain_mean",
    "chain_max",
    "core_count",
    "band_delta",
    "insert_probes_mean",
    "query_probes_mean",
    "query_probes_p50",
    "query_probes_p99",
    "failures",
    "rebuilds",
    "wall_time_s",
)


class ConfigError(ValueError):
    """The experiment configuration cannot be run."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int = 2**16
    epsilon: float = 2**-6
    alpha: float = 1.0
    d_core: int = 5
    seed: int = 1
    seeds: int = 1
    algorithm: str = "advanced"
    choice_mode: str = "stored"
    enable_deletions: bool = False
    csv_out: Optional[str] = None
    failure_c1: float = 8.0
    failure_c2: float = 12.0
    audit: bool = True
    churn_ops: int = 100_000
    churn_load: float = 1.0 - 2**-4
    negative_queries: int = 1000
    instances: int = 100  # feasibility-audit only


@dataclass
class MetricsRow:
    experiment: str
    seed: int
    phase: Optional[int] = None
    d_max: Optional[int] = None
    load: Optional[float] = None
    live_count: Optional[int] = None
    ftp_total: Optional[int] = None
    ftp_core: Optional[int] = None
    ftp_noncore: Optional[int] = None
    moves_type1: Optional[int] = None
    moves_type2: Optional[int] = None
    moves_type3: Optional[int] = None
    moves_type4: Optional[int] = None
    chain_mean: Optional[float] = None
    chain_max: Optional[int] = None
    core_count: Optional[int] = None
    band_delta: Optional[float] = None
    insert_probes_mean: Optional[float] = None
    query_probes_mean: Optional[float] = None
    query_probes_p50: Optional[float] = None
    query_probes_p99: Optional[float] = None
    failures: Optional[int] = None
    rebuilds: Optional[int] = None
    wall_time_s: Optional[float] = None

    def values(self) -> list[str]:
        out = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


@dataclass
class RunResult:
    exit_code: int
    rows: list[MetricsRow]
    extras: dict[str, Any] = field(default_factory=dict)
    csv_path: Optional[str] = None


def write_csv(rows: list[MetricsRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row.values()) + "\n")


def derive_for(config: ExperimentConfig) -> ParamSet:
    mode = Mode.BASIC if config.algorithm == "basic" else Mode.ADVANCED
    try:
        return derive_params(
            config.n,
            config.epsilon,
            config.alpha,
            config.d_core,
            mode,
            deletions=config.enable_deletions,
        )
    except RangeError as exc:
        raise ConfigError(str(exc)) from exc


def build_table(
    params: ParamSet, seed: int, *, choice_mode: str = "stored"
) -> Table:
    oracle = HashOracle(derive_seed(seed, 1), params.n, params.d)
    return Table(params, oracle, choice_mode=choice_mode)


def build_policy(config: ExperimentConfig, params: ParamSet, seed: int):
    table = build_table(params, seed, choice_mode=config.choice_mode)
    if params.mode is Mode.BASIC:
        return table, BasicPolicy(table, failure_c1=config.failure_c1)
    return table, AdvancedPolicy(
        table, failure_c2=config.failure_c2, type1_seed=derive_seed(seed, 2)
    )


def fill_keys(seed: int, count: int) -> list[int]:
    return list(key_stream(derive_seed(seed, 3), count))


def run_fill(
    config: ExperimentConfig, params: ParamSet, seed: int
) -> tuple[Table, Any, bool]:
    """Fill one table to ceil((1-epsilon)*n) insertions.

    Returns (table, policy, failed).  On failure the fill stops where it is.
    """
    table, policy = build_policy(config, params, seed)
    failed = False
    for key in fill_keys(seed, params.max_load_count()):
        if policy.insert_unique(key).status is InsertStatus.FAILED:
            failed = True
            break
    policy.finalize()
    return table, policy, failed


def _quantile(hist: dict[int, int], q: float) -> float:
    total = sum(hist.values())
    if total == 0:
        return 0.0
    acc = 0
    for k in sorted(hist):
        acc += hist[k]
        if acc / total >= q:
            return float(k)
    return float(max(hist))


def _snapshot_rows(
    config: ExperimentConfig, seed: int, metrics: Metrics, elapsed: float
) -> list[MetricsRow]:
    rows = []
    for snap in metrics.phase_snapshots:
        rows.append(
            MetricsRow(
                experiment=config.experiment,
                seed=seed,
                phase=snap.phase,
                d_max=snap.d_max,
                load=snap.load,
                live_count=snap.live_count,
                ftp_total=snap.ftp_total,
                ftp_core=snap.ftp_core,
                ftp_noncore=snap.ftp_noncore,
                moves_type1=snap.moves_by_type[0],
                moves_type2=snap.moves_by_type[1],
                moves_type3=snap.moves_by_type[2],
                moves_type4=snap.moves_by_type[3],
                chain_mean=snap.chain_mean,
                chain_max=snap.chain_max,
                core_count=snap.core_count,
                failures=snap.failures,
                wall_time_s=elapsed,
            )
        )
    return rows


def _audit_or_flag(config: ExperimentConfig, table: Table, extras: dict) -> int:
    if not config.audit:
        return 0
    problems = table.audit()
    if problems:
        extras.setdefault("audit_problems", []).extend(problems)
        return 1
    return 0


def _run_fill_family(config: ExperimentConfig) -> RunResult:
    params = derive_for(config)
    rows: list[MetricsRow] = []
    extras: dict[str, Any] = {"failed_seeds": [], "params": params}
    exit_code = 0
    for s in range(config.seeds):
        seed = config.seed + s
        t0 = time.perf_counter()
        table, policy, failed = run_fill(config, params, seed)
        elapsed = time.perf_counter() - t0
        if failed:
            extras["failed_seeds"].append(seed)
            exit_code = 1
        exit_code |= _audit_or_flag(config, table, extras)
        m = table.metrics

        if config.experiment == "insert-sweep":
            terminal = m.phase_snapshots[-1]
            for band, mean in sorted(m.band_means().items()):
                rows.append(
                    MetricsRow(
                        experiment=config.experiment,
                        seed=seed,
                        phase=terminal.phase,
                        d_max=terminal.d_max,
                        load=1.0 - 2.0**-band if band else 0.0,
                        live_count=terminal.live_count,
                        band_delta=2.0**-band,
                        insert_probes_mean=mean,
                        failures=m.failures,
                        wall_time_s=elapsed,
                    )
                )
            extras.setdefault("band_means", {})[seed] = m.band_means()
        elif config.experiment == "query-dist":
            seen_probes = []
            for key in table.live_keys():
                _, probes = policy.query(key, record=True)
                seen_probes.append(probes)
            neg_exact = 0
            neg_found = 0
            for key in key_stream(derive_seed(seed, 4), config.negative_queries):
                slot, probes = policy.query(key)
                if slot is not None:
                    neg_found += 1
                if probes == table.d_max:
                    neg_exact += 1
            hist = dict(m.query_probe_histogram)
            snap_rows = _snapshot_rows(config, seed, m, elapsed)
            snap_rows[-1].query_probes_mean = (
                sum(seen_probes) / len(seen_probes) if seen_probes else 0.0
            )
            snap_rows[-1].query_probes_p50 = _quantile(hist, 0.5)
            snap_rows[-1].query_probes_p99 = _quantile(hist, 0.99)
            rows.extend(snap_rows)
            extras.setdefault("query_histograms", {})[seed] = hist
            extras.setdefault("negative_exact", {})[seed] = (
                neg_exact,
                config.negative_queries,
            )
            if neg_found:
                extras.setdefault("negative_found", {})[seed] = neg_found
                exit_code = 1
        else:  # fill, core-occupancy, failure-rate
            if config.experiment == "failure-rate":
                rows.append(_snapshot_rows(config, seed, m, elapsed)[-1])
            else:
                rows.extend(_snapshot_rows(config, seed, m, elapsed))
        extras.setdefault("lazy_violations", {})[seed] = m.lazy_violations
        extras.setdefault("metrics", {})[seed] = m
    return RunResult(exit_code=exit_code, rows=rows, extras=extras)


def _run_coupon(config: ExperimentConfig) -> RunResult:
    rows = []
    draws_list = []
    target = math.ceil((1.0 - config.epsilon) * config.n)
    for s in range(config.seeds):
        seed = config.seed + s
        t0 = time.perf_counter()
        draws = coupon_trial(config.n, config.epsilon, seed)
        elapsed = time.perf_counter() - t0
        draws_list.append(draws)
        rows.append(
            MetricsRow(
                experiment=config.experiment,
                seed=seed,
                load=1.0 - config.epsilon,
                live_count=target,
                ftp_total=draws,
                wall_time_s=elapsed,
            )
        )
    return RunResult(exit_code=0, rows=rows, extras={"draws": draws_list})


def _run_churn(config: ExperimentConfig) -> RunResult:
    if config.algorithm != "advanced":
        raise ConfigError("churn requires --algorithm advanced")
    config = replace(config, enable_deletions=True)
    params = derive_for(config)
    threshold_load = 1.0 - math.exp(config.alpha) * config.epsilon
    if config.churn_load >= threshold_load:
        raise ConfigError(
            f"churn load {config.churn_load} is not below the rebuild "
            f"threshold {threshold_load:.4f}; pick a smaller epsilon"
        )
    rows = []
    extras: dict[str, Any] = {"params": params}
    exit_code = 0
    for s in range(config.seeds):
        seed = config.seed + s
        t0 = time.perf_counter()
        mgr = DeletionManager(
            params,
            seed,
            choice_mode=config.choice_mode,
            failure_c2=config.failure_c2,
        )
        target_live = math.floor(config.churn_load * config.n)
        keys = key_stream(derive_seed(seed, 3), 1 << 62)
        live: list[int] = []
        verify_failures = 0

        for _ in range(target_live):
            k = next(keys)
            mgr.insert(k)
            live.append(k)

        rng = SplitMix(derive_seed(seed, 5))
        snap_every = max(1, config.churn_ops // 10)
        ops = 0
        probes0 = mgr.total_probes + mgr.locate_probes
        while ops < config.churn_ops:
            # One delete of a random live key...
            idx = rng.below(len(live))
            victim = live[idx]
            live[idx] = live[-1]
            live.pop()
            if not mgr.delete(victim):
                verify_failures += 1
            if mgr.query(victim)[0] is not None:
                verify_failures += 1
            ops += 1
            if ops >= config.churn_ops:
                break
            # ... then one insert of a fresh key, keeping the load steady.
            k = next(keys)
            mgr.insert(k)
            live.append(k)
            if mgr.query(k)[0] is None:
                verify_failures += 1
            ops += 1
            if ops % snap_every == 0:
                mgr.table.take_snapshot()
                row = _snapshot_rows(config, seed, mgr.table.metrics, 0.0)[-1]
                row.rebuilds = mgr.log.rebuild_count
                rows.append(row)

        # Spot-check a sample of supposedly live keys at the end.
        check_rng = SplitMix(derive_seed(seed, 7))
        for _ in range(min(2000, len(live))):
            k = live[check_rng.below(len(live))]
            if mgr.query(k)[0] is None:
                verify_failures += 1

        elapsed = time.perf_counter() - t0
        mgr.table.take_snapshot()
        terminal = _snapshot_rows(config, seed, mgr.table.metrics, elapsed)[-1]
        terminal.rebuilds = mgr.log.rebuild_count
        terminal.failures = verify_failures
        rows.append(terminal)
        amortized = (mgr.total_probes + mgr.locate_probes - probes0) / max(1, ops)
        extras.setdefault("amortized_probes", {})[seed] = amortized
        extras.setdefault("rebuild_triggers", {})[seed] = list(
            mgr.log.trigger_augmented_counts
        )
        extras.setdefault("rebuild_threshold", mgr.config.rebuild_threshold)
        extras.setdefault("verify_failures", {})[seed] = verify_failures
        extras.setdefault("managers", {})[seed] = mgr
        if verify_failures:
            exit_code = 1
        if config.audit:
            problems = mgr.table.audit()
            if problems:
                extras.setdefault("audit_problems", []).extend(problems)
                exit_code = 1
    return RunResult(exit_code=exit_code, rows=rows, extras=extras)


def _run_feasibility(config: ExperimentConfig) -> RunResult:
    rows = []
    disagreements = 0
    rng = SplitMix(derive_seed(config.seed, 6))
    # Shapes kept small enough that the exhaustive reference is always
    # tractable; d=2 at load 3/4 is mostly infeasible, d=3 mostly feasible.
    shapes = ((16, 2, 12), (24, 3, 18), (8, 2, 6), (20, 3, 15))
    for idx in range(config.instances):
        n, d, count = shapes[idx % len(shapes)]
        oracle = HashOracle(rng.next64(), n, d)
        keys = list(key_stream(rng.next64(), count))
        inst = instance_from_oracle(keys, oracle, d)
        fast = offline_feasible(inst)
        slow = exhaustive_feasible(inst)
        agree = fast == slow
        if not agree:
            disagreements += 1
        rows.append(
            MetricsRow(
                experiment=config.experiment,
                seed=config.seed,
                phase=idx,
                d_max=d,
                load=count / n,
                live_count=count,
                failures=0 if agree else 1,
                wall_time_s=0.0,
            )
        )
    return RunResult(
        exit_code=1 if disagreements else 0,
        rows=rows,
        extras={"disagreements": disagreements},
    )


def run(config: ExperimentConfig) -> RunResult:
    """Execute one experiment; optionally write its CSV.

    Exit code 0 on full success, 1 when any run hit an unrecovered failure
    (insertion failure without rebuild, audit violation, verification
    mismatch, oracle disagreement).
    """
    if config.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    if config.experiment == "coupon-check":
        result = _run_coupon(config)
    elif config.experiment == "churn":
        result = _run_churn(config)
    elif config.experiment == "feasibility-audit":
        result = _run_feasibility(config)
    else:
        result = _run_fill_family(config)
    if config.csv_out:
        write_csv(result.rows, config.csv_out)
        result.csv_path = config.csv_out
    return result
