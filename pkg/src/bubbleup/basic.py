"""Basic bubble-up insertion policy.

A d-ary table whose last two hash indices form an embedded 2-ary cuckoo
core.  Eviction handling for an element y with current index c = choice(y):

  c == d      move to h_{d-1}(y), evicting any occupant        (type 1)
  c == d-1    move to h_d(y), evicting any occupant            (type 2)
  c <  d-1    scan h_{c+1}(y) .. h_{d-2}(y) for a free slot;
              take the first one found                         (type 3)
              otherwise move to h_{d-1}(y) and evict           (type 4)

Elements below the core never displace anyone (type 3 only fills free
slots); once an element reaches the core it stays there.  The insertion
fails if ``failure_threshold`` consecutive type 1/2 moves occur, i.e. if a
single eviction chain inside the 2-ary core runs too long.
"""

from __future__ import annotations

import math

from .params import Mode, ParamSet
from .table import (
    Evicted,
    InsertResult,
    InsertStatus,
    SlotState,
    Table,
    TableFailedError,
    band_index,
)

DEFAULT_FAILURE_C1 = 8.0


class BasicPolicy:
    """Insertion/lookup driver for the basic policy over a shared Table."""

    def __init__(self, table: Table, *, failure_c1: float = DEFAULT_FAILURE_C1):
        if table.params.mode is not Mode.BASIC:
            raise ValueError("BasicPolicy requires basic-mode parameters")
        if failure_c1 < 4.0:
            raise ValueError(f"failure_c1 must be >= 4, got {failure_c1}")
        self.table = table
        self.params: ParamSet = table.params
        self.failure_threshold = math.ceil(failure_c1 * math.log(table.n))
        table.set_active_range(self.params.d, 1)

    def insert(self, x: int) -> InsertResult:
        """Checked insert: duplicate keys are a no-op (AlreadyPresent)."""
        if self.lookup(x) is not None:
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
        d = self.params.d
        band = band_index(t.n, t.free_count)
        ftp0 = m.first_time_probes_total
        moves = m.moves_by_type

        key, tomb, c = x, tombstone, 0
        chain = 0
        consec12 = 0
        while True:
            if c == d:
                move_type, target = 1, d - 1
            elif c == d - 1:
                move_type, target = 2, d
            else:
                placed_free = False
                for i in range(c + 1, d - 1):
                    view = t.probe(key, i)
                    if view.state == SlotState.EMPTY:
                        t.place_at(key, i, view.index, tomb)
                        moves[3] += 1
                        chain += 1
                        placed_free = True
                        break
                if placed_free:
                    break
                t.mark_core_entry(key)
                move_type, target = 4, d - 1

            ev = t.place(key, target, tomb)
            moves[move_type] += 1
            chain += 1
            consec12 = consec12 + 1 if move_type in (1, 2) else 0
            if ev is None:
                break
            if consec12 >= self.failure_threshold:
                m.failures += 1
                t.failed = True
                t.pending_eviction = ev
                return InsertResult(InsertStatus.FAILED, chain)
            key, tomb, c = ev.key, ev.tombstone, ev.choice

        dftp = m.first_time_probes_total - ftp0
        m.band_ftp_sums[band] += dftp
        m.band_insert_counts[band] += 1
        m.eviction_chain_lengths[chain] += 1
        return InsertResult(InsertStatus.PLACED, chain)

    def lookup(self, x: int) -> int | None:
        """Slot holding x, scanning h_1(x)..h_d(x); None when absent.

        Read-only: no probe accounting.  A tombstone of x counts as absent.
        """
        t = self.table
        h = t.oracle.hash
        states = t._states
        keys = t._keys
        for i in range(1, self.params.d + 1):
            j = h(x, i)
            st = states[j]
            if st and keys[j] == x:
                return j if st == SlotState.OCCUPIED else None
        return None

    def query(self, x: int, record: bool = False) -> tuple[int | None, int]:
        """Lookup with a probes-used count (ascending scan order)."""
        t = self.table
        h = t.oracle.hash
        states = t._states
        keys = t._keys
        probes = 0
        for i in range(1, self.params.d + 1):
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

    def locate_resident(self, x: int) -> tuple[int, SlotState] | None:
        """Slot of x whether live or tombstoned; None when not resident."""
        t = self.table
        h = t.oracle.hash
        states = t._states
        keys = t._keys
        for i in range(1, self.params.d + 1):
            j = h(x, i)
            st = states[j]
            if st and keys[j] == x:
                return j, SlotState(st)
        return None

    def finalize(self) -> None:
        """Capture the terminal snapshot after a workload completes."""
        self.table.take_snapshot()
