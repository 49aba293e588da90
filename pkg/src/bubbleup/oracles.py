"""Independent brute-force references for the statistical acceptance checks.

Nothing here shares code with the table or the policies: these are the
second route every claim is checked against.

  offline_feasible      exact maximum bipartite matching (augmenting paths):
                        can the keys be assigned to distinct slots at all?
  exhaustive_feasible   backtracking over all assignments; cross-checks the
                        matching answer on small instances.
  coupon_trial          draw iid uniform coupons until a target number of
                        distinct values is seen; the identity
                        E[draws] ~ n ln(1/epsilon) underlies every
                        first-time-probe prediction.
  geometric_tail_check  does a sample histogram look dominated by a
                        geometric tail with the claimed mean?
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

MAX_EXACT_EDGES = 100_000


class SizeError(ValueError):
    """Instance too large for the exact computation."""


class InsufficientSamplesError(ValueError):
    """Too few samples for a meaningful tail fit."""


@dataclass(frozen=True)
class BipartiteInstance:
    """Keys, slots, and the key -> candidate-slot adjacency."""

    keys: tuple[int, ...]
    n: int
    d: int
    edges: dict[int, tuple[int, ...]]  # exactly d slots per key, duplicates kept

    def __post_init__(self):
        for k in self.keys:
            if len(self.edges[k]) != self.d:
                raise ValueError(f"key {k} has {len(self.edges[k])} slots, want {self.d}")


def instance_from_oracle(keys: Sequence[int], oracle, d: int) -> BipartiteInstance:
    """Adjacency induced by the first d hashes of each key."""
    keys = tuple(keys)
    return BipartiteInstance(
        keys=keys,
        n=oracle.n,
        d=d,
        edges={k: oracle.hashes_up_to(k, d) for k in keys},
    )


def offline_feasible(inst: BipartiteInstance) -> bool:
    """True iff every key can be matched to a distinct one of its slots.

    Exact augmenting-path matching; deterministic scan order.
    """
    if len(inst.keys) * inst.d > MAX_EXACT_EDGES:
        raise SizeError(
            f"{len(inst.keys) * inst.d} edges exceed the exact bound {MAX_EXACT_EDGES}"
        )
    if len(inst.keys) > inst.n:
        return False
    adj = {k: sorted(set(inst.edges[k])) for k in inst.keys}
    match_slot: dict[int, int] = {}  # slot -> key

    def try_augment(u: int, visited: set[int]) -> bool:
        for v in adj[u]:
            if v in visited:
                continue
            visited.add(v)
            w = match_slot.get(v)
            if w is None or try_augment(w, visited):
                match_slot[v] = u
                return True
        return False

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 2 * len(inst.keys) + 100))
    try:
        for u in inst.keys:
            if not try_augment(u, set()):
                return False
    finally:
        sys.setrecursionlimit(old_limit)
    return True


def exhaustive_feasible(inst: BipartiteInstance, node_budget: int = 10_000_000) -> bool:
    """Backtracking over all key->slot assignments; exact but exponential.

    Keys are ordered by ascending slot-degree so infeasible clusters surface
    early, and dead (key-index, used-slot-set) states are cached so that
    near-infeasible instances do not re-explore the same subtrees.  Raises
    SizeError when the node budget runs out anyway.
    """
    adj = {k: sorted(set(inst.edges[k])) for k in inst.keys}
    order = sorted(inst.keys, key=lambda k: (len(adj[k]), k))
    slot_ids = {v: b for b, v in enumerate(sorted({v for vs in adj.values() for v in vs}))}
    used = 0
    nodes = 0
    dead: set[tuple[int, int]] = set()

    def walk(idx: int) -> bool:
        nonlocal nodes, used
        if idx == len(order):
            return True
        if (idx, used) in dead:
            return False
        nodes += 1
        if nodes > node_budget:
            raise SizeError(f"exhaustive search exceeded {node_budget} nodes")
        for v in adj[order[idx]]:
            bit = 1 << slot_ids[v]
            if not used & bit:
                used |= bit
                if walk(idx + 1):
                    return True
                used &= ~bit
        dead.add((idx, used))
        return False

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 2 * len(inst.keys) + 100))
    try:
        return walk(0)
    finally:
        sys.setrecursionlimit(old_limit)


def coupon_trial(n: int, epsilon: float, seed: int) -> int:
    """Number of iid uniform draws from [0, n) until ceil((1-epsilon)*n)
    distinct values have been seen.

    Deterministic given the seed; vectorized so that desk-scale trial counts
    finish in seconds.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    target = math.floor((1.0 - epsilon) * n)
    if target <= 0:
        # Degenerate: a whole-number target of zero needs no draws.
        return 0
    rng = np.random.default_rng(seed)
    seen = np.zeros(n, dtype=bool)
    distinct = 0
    drawn = 0
    while True:
        # Expected draws still needed, with slack; re-chunk until done.
        expect = n * math.log((n - distinct) / (n - target + 0.5))
        chunk = int(expect * 1.2) + 4 * int(math.isqrt(n)) + 64
        draws = rng.integers(0, n, size=chunk, dtype=np.int64)
        vals, first_idx = np.unique(draws, return_index=True)
        fresh = ~seen[vals]
        fresh_count = int(fresh.sum())
        if distinct + fresh_count >= target:
            order = np.sort(first_idx[fresh])
            pos = int(order[target - distinct - 1])
            return drawn + pos + 1
        seen[vals[fresh]] = True
        distinct += fresh_count
        drawn += chunk


@dataclass(frozen=True)
class TailReport:
    passed: bool
    mean: float
    ratio: float  # fitted per-step survival ratio r in P[X >= k] ~ A * r^k
    amplitude: float
    samples: int
    detail: str


def geometric_tail_check(
    samples: Mapping[int, int] | Sequence[int],
    mean_bound: float,
    *,
    min_samples: int = 10_000,
    ratio_bound: float = 1.0,
) -> TailReport:
    """Check a histogram against a geometric-tail model.

    Passes iff (a) the sample mean is at most ``mean_bound`` and (b) a
    least-squares fit of log P[X >= k] against k, up to the 99.9th
    percentile and truncated at empty bins, has ratio r < ``ratio_bound``.
    """
    if isinstance(samples, Mapping):
        hist = dict(samples)
    else:
        hist = {}
        for v in samples:
            hist[v] = hist.get(v, 0) + 1
    total = sum(hist.values())
    if total < min_samples:
        raise InsufficientSamplesError(f"{total} samples < required {min_samples}")
    mean = sum(k * c for k, c in hist.items()) / total

    ks = sorted(hist)
    # Survival S(k) = P[X >= k] on integer points 1..p999.
    cutoff = None
    acc = 0
    for k in ks:
        acc += hist[k]
        if acc / total >= 0.999 and cutoff is None:
            cutoff = k
    hi = cutoff if cutoff is not None else ks[-1]
    pts_k = []
    pts_log_s = []
    above = total
    for k in range(1, hi + 1):
        if above <= 0:
            break
        pts_k.append(k)
        pts_log_s.append(math.log(above / total))
        above -= hist.get(k, 0)

    if len(pts_k) < 2:
        # Everything sits at k <= 1: sharper than any geometric.
        ratio = 0.0
        amplitude = 1.0
        detail = "degenerate: all mass at a single point"
    else:
        xs = np.array(pts_k, dtype=float)
        ys = np.array(pts_log_s, dtype=float)
        slope, intercept = np.polyfit(xs, ys, 1)
        ratio = float(math.exp(slope))
        amplitude = float(math.exp(intercept))
        detail = f"fit over k in [1, {pts_k[-1]}], {len(pts_k)} points"

    passed = mean <= mean_bound and ratio < ratio_bound
    return TailReport(
        passed=passed,
        mean=mean,
        ratio=ratio,
        amplitude=amplitude,
        samples=total,
        detail=f"mean {mean:.4g} vs bound {mean_bound:.4g}; r = {ratio:.4g}; {detail}",
    )
