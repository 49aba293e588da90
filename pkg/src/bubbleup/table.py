"""Slot store shared by both insertion policies.

The table owns:

  * the n-slot array with per-slot state (empty / occupied / tombstone),
    key, and the hash index used to place the key there;
  * load accounting (live and augmented counts, per-choice counts);
  * probe instrumentation: a per-key bitmap of hash indices whose slot has
    been inspected during insertions.  The first inspection of (x, i) is a
    *first-time probe*, the unit in which insertion cost is measured and the
    quantity all the statistical checks are built on.

Probes are classified core/non-core by their index relative to the active
core range (core_lo, d_max], which the owning policy keeps up to date.
Queries and audits never touch probe accounting: they use ``view``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import NamedTuple, Optional

from .choice import choice_prime
from .hashing import _M1, _M2, MASK64 as _MASK64
from .params import Mode, ParamSet


class SlotState(IntEnum):
    EMPTY = 0
    OCCUPIED = 1
    TOMBSTONE = 2


class ChoiceMode(str, Enum):
    STORED = "stored"
    RECOMPUTED = "recomputed"


class InsertStatus(Enum):
    PLACED = "placed"
    ALREADY_PRESENT = "already_present"
    FAILED = "failed"


@dataclass(frozen=True)
class InsertResult:
    status: InsertStatus
    chain_length: int = 0


class SlotView(NamedTuple):
    index: int
    state: int
    key: Optional[int]


class Evicted(NamedTuple):
    key: int
    tombstone: bool
    choice: int
    slot: int


class NotFoundError(KeyError):
    """The addressed slot does not hold the expected key."""


class TableFailedError(RuntimeError):
    """Mutation attempted on a table that has declared insertion failure."""


class ConsistencyError(RuntimeError):
    """An internal invariant did not hold; indicates a bug, not bad input."""


_MASK32 = (1 << 32) - 1


def band_index(n: int, free: int) -> int:
    """Dyadic load band of a table with ``free`` empty slots out of n.

    Band j covers free fractions [2^-j, 2^-(j-1)), i.e. loads
    [1 - 2*delta, 1 - delta) for delta = 2^-j.
    """
    return (-(-n // free) - 1).bit_length()


@dataclass(frozen=True)
class PhaseSnapshot:
    """Cumulative counters captured at the end of a phase (or of a run)."""

    phase: int
    d_max: int
    load: float
    live_count: int
    augmented_count: int
    ftp_total: int
    ftp_core: int
    ftp_noncore: int
    moves_by_type: tuple[int, int, int, int]
    core_count: int
    failures: int
    chain_mean: float
    chain_max: int


@dataclass
class Metrics:
    """Counters and histograms accumulated over one table lifetime."""

    first_time_probes_total: int = 0
    first_time_probes_core: int = 0
    first_time_probes_noncore: int = 0
    probes_total: int = 0  # every slot inspection, revisits included
    moves_by_type: list[int] = field(default_factory=lambda: [0] * 5)
    type1_k_counts: Counter = field(default_factory=Counter)
    eviction_chain_lengths: Counter = field(default_factory=Counter)
    query_probe_histogram: Counter = field(default_factory=Counter)
    failures: int = 0
    lazy_violations: int = 0
    choice_prime_evals: int = 0
    corrupt_rule_hits: int = 0
    aux_hash_evals: int = 0
    band_ftp_sums: list[int] = field(default_factory=lambda: [0] * 40)
    band_insert_counts: list[int] = field(default_factory=lambda: [0] * 40)
    phase_snapshots: list[PhaseSnapshot] = field(default_factory=list)

    def chain_mean(self) -> float:
        total = sum(self.eviction_chain_lengths.values())
        if total == 0:
            return 0.0
        weighted = sum(k * v for k, v in self.eviction_chain_lengths.items())
        return weighted / total

    def chain_max(self) -> int:
        return max(self.eviction_chain_lengths, default=0)

    def band_means(self) -> dict[int, float]:
        """Mean first-time probes per insertion, keyed by dyadic band index."""
        out = {}
        for j, cnt in enumerate(self.band_insert_counts):
            if cnt:
                out[j] = self.band_ftp_sums[j] / cnt
        return out


class Table:
    """The n-slot store.  Single mutator at a time; reads may be concurrent
    with each other but never with a mutator (no internal locking)."""

    __slots__ = (
        "params",
        "oracle",
        "choice_mode",
        "metrics",
        "live_count",
        "augmented_count",
        "failed",
        "pending_eviction",
        "d_max",
        "core_lo",
        "phase",
        "_entry_tag",
        "_states",
        "_keys",
        "_choices",
        "_choice_counts",
        "_keyinfo",
        "_osub",
        "_on",
    )

    def __init__(
        self,
        params: ParamSet,
        oracle,
        *,
        choice_mode: ChoiceMode | str = ChoiceMode.STORED,
        metrics: Metrics | None = None,
    ):
        if oracle.n != params.n or oracle.d < params.d:
            raise ValueError("oracle does not cover the parameter set")
        self.params = params
        self.oracle = oracle
        self.choice_mode = ChoiceMode(choice_mode)
        self.metrics = metrics if metrics is not None else Metrics()
        n = params.n
        self.live_count = 0
        self.augmented_count = 0
        self.failed = False
        self.pending_eviction: Evicted | None = None
        self._states = bytearray(n)
        self._keys: list[Optional[int]] = [None] * n
        # Placement index per slot.  Maintained in both choice modes; in
        # recomputed mode the policies never read it (audits and
        # equivalence checks do).
        self._choices = bytearray(n)
        self._choice_counts = [0] * (params.d + 1)
        # Per-key packed word: low 32 bits = bitmap of probed hash indices,
        # high bits = 1 + phase tag of the key's latest core entry.
        self._keyinfo: dict[int, int] = {}
        # Oracle internals cached for the inlined hash in probe/place; any
        # other oracle-like object falls back to its hash method.
        self._osub = getattr(oracle, "_subseeds", None)
        self._on = oracle.n
        self.set_active_range(params.d_max_for_phase(1), 1)

    # -- active range -----------------------------------------------------

    def set_active_range(self, d_max: int, phase: int) -> None:
        """Install the usable index ceiling and core range for a phase."""
        if d_max > self.params.d:
            raise ConsistencyError(f"d_max {d_max} exceeds d {self.params.d}")
        self.d_max = d_max
        self.core_lo = d_max - self.params.d_core
        self.phase = phase
        self._entry_tag = phase + 1

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def load(self) -> float:
        """Augmented load factor (tombstones included)."""
        return self.augmented_count / self.params.n

    @property
    def live_load(self) -> float:
        return self.live_count / self.params.n

    @property
    def free_count(self) -> int:
        return self.params.n - self.augmented_count

    def core_count(self) -> int:
        """Elements (tombstones included) whose placement index is in the
        active core range."""
        return sum(self._choice_counts[self.core_lo + 1 : self.d_max + 1])

    # -- probe accounting --------------------------------------------------

    def _touch(self, x: int, i: int) -> None:
        info = self._keyinfo.get(x, 0)
        bit = 1 << (i - 1)
        if not info & bit:
            m = self.metrics
            m.first_time_probes_total += 1
            if i > self.core_lo:
                m.first_time_probes_core += 1
                # A core-range index can only be probed lazily: the element
                # must already have entered the core during this phase.
                if (info >> 32) != self._entry_tag:
                    m.lazy_violations += 1
            else:
                m.first_time_probes_noncore += 1
            self._keyinfo[x] = info | bit

    def mark_core_entry(self, x: int) -> None:
        """Record that x enters the core table in the current phase; must be
        called before its first core-range probe of the phase."""
        info = self._keyinfo.get(x, 0)
        self._keyinfo[x] = (info & _MASK32) | (self._entry_tag << 32)

    def probed_mask(self, x: int) -> int:
        return self._keyinfo.get(x, 0) & _MASK32

    def core_entry_phase(self, x: int) -> int | None:
        tag = self._keyinfo.get(x, 0) >> 32
        return tag - 1 if tag else None

    # -- slot operations ---------------------------------------------------

    def probe(self, x: int, i: int) -> SlotView:
        """Inspect slot h_i(x) during an insertion; counts probe accounting."""
        if not 1 <= i <= self.d_max:
            raise IndexError(f"probe index {i} outside [1, {self.d_max}]")
        if self._osub is not None:
            # Hot path: hash and _touch inlined; keep in sync with both.
            z = (x & _MASK64) ^ self._osub[i]
            z = ((z ^ (z >> 30)) * _M1) & _MASK64
            z = ((z ^ (z >> 27)) * _M2) & _MASK64
            j = ((z ^ (z >> 31)) * self._on) >> 64
        else:
            j = self.oracle.hash(x, i)
        m = self.metrics
        info = self._keyinfo.get(x, 0)
        bit = 1 << (i - 1)
        if not info & bit:
            m.first_time_probes_total += 1
            if i > self.core_lo:
                m.first_time_probes_core += 1
                if (info >> 32) != self._entry_tag:
                    m.lazy_violations += 1
            else:
                m.first_time_probes_noncore += 1
            self._keyinfo[x] = info | bit
        m.probes_total += 1
        st = self._states[j]
        return SlotView(j, st, self._keys[j] if st else None)

    def view(self, x: int, i: int) -> SlotView:
        """Read-only slot view; no probe accounting (queries, audits)."""
        j = self.oracle.hash(x, i)
        st = self._states[j]
        return SlotView(j, st, self._keys[j] if st else None)

    def place(self, x: int, i: int, tombstone: bool = False) -> Evicted | None:
        """Write x at h_i(x) with placement index i, evicting any occupant.

        Occupied and tombstone slots both yield an eviction (a tombstone
        keeps its deleted marking as it moves through the chain).  Returns
        None when the slot was empty, which is what ends a chain.
        """
        if not 1 <= i <= self.d_max:
            raise IndexError(f"place index {i} outside [1, {self.d_max}]")
        if self._osub is not None:
            # Hot path: hash and _touch inlined; keep in sync with both.
            z = (x & _MASK64) ^ self._osub[i]
            z = ((z ^ (z >> 30)) * _M1) & _MASK64
            z = ((z ^ (z >> 27)) * _M2) & _MASK64
            j = ((z ^ (z >> 31)) * self._on) >> 64
        else:
            j = self.oracle.hash(x, i)
        m = self.metrics
        info = self._keyinfo.get(x, 0)
        bit = 1 << (i - 1)
        if not info & bit:
            m.first_time_probes_total += 1
            if i > self.core_lo:
                m.first_time_probes_core += 1
                if (info >> 32) != self._entry_tag:
                    m.lazy_violations += 1
            else:
                m.first_time_probes_noncore += 1
            self._keyinfo[x] = info | bit
        m.probes_total += 1
        st = self._states[j]
        if st == SlotState.EMPTY:
            self._write(j, x, i, tombstone)
            self.augmented_count += 1
            if not tombstone:
                self.live_count += 1
            return None
        ev_key = self._keys[j]
        ev_tomb = st == SlotState.TOMBSTONE
        old_choice = self._choices[j]
        if self.choice_mode is ChoiceMode.RECOMPUTED:
            rep = choice_prime(self.oracle, ev_key, j, self.d_max)
            m.choice_prime_evals += rep.hash_evaluations
            if rep.result is None:
                raise ConsistencyError(f"slot {j} unreachable by its occupant")
            ev_choice = rep.result
        else:
            ev_choice = old_choice
        self._choice_counts[old_choice] -= 1
        self._write(j, x, i, tombstone)
        if ev_tomb and not tombstone:
            self.live_count += 1
        elif not ev_tomb and tombstone:
            self.live_count -= 1
        return Evicted(ev_key, ev_tomb, ev_choice, j)

    def place_at(self, x: int, i: int, j: int, tombstone: bool = False) -> None:
        """Fill the empty slot j = h_i(x) found by a preceding probe."""
        if self._states[j] != SlotState.EMPTY:
            raise ConsistencyError(f"place_at on non-empty slot {j}")
        self._write(j, x, i, tombstone)
        self.augmented_count += 1
        if not tombstone:
            self.live_count += 1

    def _write(self, j: int, x: int, i: int, tombstone: bool) -> None:
        self._states[j] = SlotState.TOMBSTONE if tombstone else SlotState.OCCUPIED
        self._keys[j] = x
        self._choices[j] = i
        self._choice_counts[i] += 1

    def choice_of(self, x: int, at_slot: int) -> int:
        """Hash index housing x at ``at_slot``.

        Stored mode reads the recorded index; recomputed mode recovers it by
        the descending-scan protocol (largest matching index, which can
        exceed the recorded one when x carries hash collisions).
        """
        if self._states[at_slot] == SlotState.EMPTY or self._keys[at_slot] != x:
            raise NotFoundError(f"slot {at_slot} does not hold key {x}")
        if self.choice_mode is ChoiceMode.STORED:
            return self._choices[at_slot]
        rep = choice_prime(self.oracle, x, at_slot, self.d_max)
        self.metrics.choice_prime_evals += rep.hash_evaluations
        if rep.result is None:
            raise ConsistencyError(f"slot {at_slot} unreachable by key {x}")
        return rep.result

    # -- deletion support ----------------------------------------------------

    def mark_deleted(self, j: int) -> None:
        if self._states[j] != SlotState.OCCUPIED:
            raise NotFoundError(f"slot {j} holds no live element")
        self._states[j] = SlotState.TOMBSTONE
        self.live_count -= 1

    def unmark(self, j: int) -> None:
        if self._states[j] != SlotState.TOMBSTONE:
            raise NotFoundError(f"slot {j} holds no tombstone")
        self._states[j] = SlotState.OCCUPIED
        self.live_count += 1

    # -- inspection ----------------------------------------------------------

    def slot_state(self, j: int) -> SlotState:
        return SlotState(self._states[j])

    def stored_choice(self, j: int) -> int:
        return self._choices[j]

    def iter_residents(self):
        """Yield (slot, key, state, stored_choice) for every non-empty slot."""
        states = self._states
        keys = self._keys
        choices = self._choices
        for j in range(self.params.n):
            st = states[j]
            if st:
                yield j, keys[j], st, choices[j]

    def live_keys(self) -> list[int]:
        """Live keys in slot-scan order (rebuild order)."""
        return [
            k
            for j, k, st, _ in self.iter_residents()
            if st == SlotState.OCCUPIED
        ]

    def take_snapshot(self) -> PhaseSnapshot:
        """Capture cumulative counters for the current phase; appended to
        ``metrics.phase_snapshots``."""
        m = self.metrics
        snap = PhaseSnapshot(
            phase=self.phase,
            d_max=self.d_max,
            load=self.load,
            live_count=self.live_count,
            augmented_count=self.augmented_count,
            ftp_total=m.first_time_probes_total,
            ftp_core=m.first_time_probes_core,
            ftp_noncore=m.first_time_probes_noncore,
            moves_by_type=tuple(m.moves_by_type[1:5]),
            core_count=self.core_count(),
            failures=m.failures,
            chain_mean=m.chain_mean(),
            chain_max=m.chain_max(),
        )
        m.phase_snapshots.append(snap)
        return snap

    def audit(self) -> list[str]:
        """Full-scan consistency check; returns human-readable violations.

        Verifies the matching invariant (every resident key actually hashes
        to its slot under its reported choice), the placement-index range,
        and that the cached counters agree with a recount.
        """
        problems = []
        live = 0
        augmented = 0
        counts = [0] * (self.params.d + 1)
        recomputed = self.choice_mode is ChoiceMode.RECOMPUTED
        for j, key, st, stored in self.iter_residents():
            augmented += 1
            if st == SlotState.OCCUPIED:
                live += 1
            if key is None:
                problems.append(f"slot {j}: non-empty slot without key")
                continue
            if not 1 <= stored <= self.d_max:
                problems.append(
                    f"slot {j}: stored choice {stored} outside [1, {self.d_max}]"
                )
            counts[stored] += 1
            if recomputed:
                rep = choice_prime(self.oracle, key, j, self.d_max)
                if rep.result is None:
                    problems.append(f"slot {j}: key {key} has no matching hash")
            elif self.oracle.hash(key, stored) != j:
                problems.append(
                    f"slot {j}: hash(key, {stored}) != slot for key {key}"
                )
        if live != self.live_count:
            problems.append(f"live recount {live} != cached {self.live_count}")
        if augmented != self.augmented_count:
            problems.append(
                f"augmented recount {augmented} != cached {self.augmented_count}"
            )
        if counts != self._choice_counts:
            problems.append("per-choice counts disagree with recount")
        return problems
