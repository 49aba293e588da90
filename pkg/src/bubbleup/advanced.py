"""Advanced bubble-up insertion policy with the descending query order.

The table proceeds in phases.  During phase q only the first
d_max = gamma + q*d_core hashes are usable, and the *core* is the set of
elements placed under the top d_core of them.  The phase ends when the
augmented load reaches 1 - e^(-d_max + alpha); d_max then grows by d_core,
which instantly empties the core (no element can sit above the old ceiling).

Eviction handling for an element y with current index c = choice(y):

  core (c > d_max - d_core)   relocate to h_{d_max-k+1}(y) for uniform
                              k in [1, d_core], evicting any occupant (type 1)
  otherwise                   scan h_i(y) for max(1, c - d_core) <= i <=
                              d_max - d_core and take the first free slot
                              (type 2); if none, enter the core via type 1

In recomputed-choice mode, a scan index whose hash collides with one of the
element's core hashes routes it into the core immediately, without
inspecting the slot; this keeps recovered choices trustworthy for everything
the policy decides on.

Failure is declared when a single core eviction chain (consecutive type 1
moves not interrupted by landing on a non-core occupant or a free slot)
exceeds ``failure_threshold``.

Queries probe h_{d_max}(x), h_{d_max-1}(x), ... downward: elements bubble
toward high indices over time, so positive queries stop after O(1) probes
on average while negative queries cost exactly d_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .choice import core_hashes
from .hashing import _M1, _M2, GOLDEN, MASK64, SplitMix
from .params import Mode, ParamSet
from .table import (
    ConsistencyError,
    InsertResult,
    InsertStatus,
    SlotState,
    Table,
    TableFailedError,
    band_index,
)

# Calibrated so that healthy desk-scale fills stay an order of magnitude
# below the threshold: measured core-chain tails reach ~5x(ln n)^2 near
# full load, so the cutoff needs a constant comfortably above that.
DEFAULT_FAILURE_C2 = 12.0


@dataclass(frozen=True)
class PhaseState:
    """Live view of the current phase."""

    q: int
    d_max: int
    phase_end_load: float
    core_range: tuple[int, int]  # (exclusive lower bound, inclusive upper)


class AdvancedPolicy:
    """Insertion/query driver for the advanced policy over a shared Table."""

    def __init__(
        self,
        table: Table,
        *,
        failure_c2: float = DEFAULT_FAILURE_C2,
        type1_seed: int = 0,
    ):
        if table.params.mode is not Mode.ADVANCED:
            raise ValueError("AdvancedPolicy requires advanced-mode parameters")
        if failure_c2 <= 0.0:
            raise ValueError(f"failure_c2 must be positive, got {failure_c2}")
        self.table = table
        self.params: ParamSet = table.params
        self.failure_threshold = math.ceil(failure_c2 * math.log(table.n) ** 2)
        # Dedicated randomness for type 1 targets, separate from the oracle.
        self._rng = SplitMix(type1_seed)
        self.q = 1
        table.set_active_range(self.params.d_max_for_phase(1), 1)
        self._phase_end_count = self._end_count(1)

    def _end_count(self, q: int) -> int:
        return min(self.table.n, math.ceil(self.params.phase_end_load(q) * self.table.n))

    def current_phase(self) -> PhaseState:
        t = self.table
        return PhaseState(
            q=self.q,
            d_max=t.d_max,
            phase_end_load=self.params.phase_end_load(self.q),
            core_range=(t.core_lo, t.d_max),
        )

    def insert(self, x: int) -> InsertResult:
        """Checked insert: duplicate keys are a no-op (AlreadyPresent)."""
        loc = self.locate_resident(x)
        if loc is not None and loc[1] == SlotState.OCCUPIED:
            return InsertResult(InsertStatus.ALREADY_PRESENT)
        return self.insert_unique(x)

    def insert_unique(self, x: int, tombstone: bool = False) -> InsertResult:
        """Insert x assuming it is not present (skips the duplicate lookup)."""
        t = self.table
        if t.failed:
            raise TableFailedError("table is in failed state")
        if t.free_count == 0:
            raise ValueError("table is full")
        m = t.metrics
        d_core = self.params.d_core
        recomputed = t.choice_mode.value == "recomputed"
        band = band_index(t.n, t.free_count)
        ftp0 = m.first_time_probes_total
        moves = m.moves_by_type
        rng = self._rng

        key, tomb, c = x, tombstone, 0
        chain = 0
        consec1 = 0
        rstate = rng.state
        while True:
            core_lo = t.core_lo
            if c <= core_lo:
                placed_free = False
                cores = None
                for i in range(max(1, c - d_core), core_lo + 1):
                    if recomputed:
                        # Collision of a scan hash with one of the core
                        # hashes sends the element straight into the core,
                        # without inspecting the slot (no probe).
                        if cores is None:
                            cores = core_hashes(t.oracle, key, t.d_max, d_core)
                            m.aux_hash_evals += d_core
                        m.aux_hash_evals += 1
                        if t.oracle.hash(key, i) in cores:
                            m.corrupt_rule_hits += 1
                            break
                    view = t.probe(key, i)
                    if view.state == SlotState.EMPTY:
                        t.place_at(key, i, view.index, tomb)
                        moves[2] += 1
                        chain += 1
                        placed_free = True
                        break
                if placed_free:
                    break
                t.mark_core_entry(key)

            # SplitMix.below inlined (hot path); state written back below.
            rstate = z = (rstate + GOLDEN) & MASK64
            z = ((z ^ (z >> 30)) * _M1) & MASK64
            z = ((z ^ (z >> 27)) * _M2) & MASK64
            k = 1 + (z ^ (z >> 31)) % d_core
            m.type1_k_counts[k] += 1
            ev = t.place(key, t.d_max - k + 1, tomb)
            moves[1] += 1
            chain += 1
            if ev is None:
                break
            if ev.choice <= t.core_lo:
                # The random walk left the core sub-table: one core eviction
                # chain ends here and a fresh one may start.
                consec1 = 0
            else:
                consec1 += 1
                if consec1 >= self.failure_threshold:
                    rng.state = rstate
                    m.failures += 1
                    t.failed = True
                    t.pending_eviction = ev
                    return InsertResult(InsertStatus.FAILED, chain)
            key, tomb, c = ev.key, ev.tombstone, ev.choice

        rng.state = rstate
        dftp = m.first_time_probes_total - ftp0
        m.band_ftp_sums[band] += dftp
        m.band_insert_counts[band] += 1
        m.eviction_chain_lengths[chain] += 1
        self._maybe_advance_phase()
        return InsertResult(InsertStatus.PLACED, chain)

    def _maybe_advance_phase(self) -> None:
        t = self.table
        if self.q >= self.params.final_phase:
            return
        if t.augmented_count < self._phase_end_count:
            return
        t.take_snapshot()
        self.q += 1
        t.set_active_range(self.params.d_max_for_phase(self.q), self.q)
        self._phase_end_count = self._end_count(self.q)
        if t.core_count() != 0:
            raise ConsistencyError("core range non-empty at phase start")
        if (
            self.q < self.params.final_phase
            and t.augmented_count >= self._phase_end_count
        ):
            # One insertion adds one element, so a second advance in the
            # same step means the schedule itself is broken.
            raise ConsistencyError("phase advanced twice on a single insertion")

    def query(self, x: int, record: bool = False) -> tuple[int | None, int]:
        """(slot, probes used) scanning h_{d_max}(x) down to h_1(x).

        Returns (None, probes) for absent keys after exactly d_max probes
        (or earlier if a tombstone of x settles the question).  Query probes
        never touch first-time-probe accounting.
        """
        t = self.table
        h = t.oracle.hash
        states = t._states
        keys = t._keys
        probes = 0
        for i in range(t.d_max, 0, -1):
            j = h(x, i)
            probes += 1
            st = states[j]
            if st and keys[j] == x:
                if st == SlotState.OCCUPIED:
                    if record:
                        t.metrics.query_probe_histogram[probes] += 1
                    return j, probes
                return None, probes
        return None, probes

    def lookup(self, x: int) -> int | None:
        return self.query(x)[0]

    def locate_resident(self, x: int) -> tuple[int, SlotState] | None:
        """Slot of x whether live or tombstoned; None when not resident."""
        t = self.table
        h = t.oracle.hash
        states = t._states
        keys = t._keys
        for i in range(t.d_max, 0, -1):
            j = h(x, i)
            st = states[j]
            if st and keys[j] == x:
                return j, SlotState(st)
        return None

    def finalize(self) -> None:
        """Capture the terminal snapshot after a workload completes."""
        self.table.take_snapshot()
