"""Tombstone deletions with threshold-triggered full rebuilds.

Deletion marks a slot as a tombstone.  Tombstones keep participating in
eviction chains exactly like live elements (the deleted marking travels with
the key when it is displaced), so they consume space until a rebuild clears
them.  The *augmented* load counts tombstones; whenever it reaches
1 - epsilon' for epsilon' = e^alpha * epsilon, the table is rebuilt from
scratch with a fresh oracle seed and only the live keys are re-inserted.

An insertion failure is handled the same way: immediate rebuild.  With
deletions enabled the augmented load never exceeds the rebuild threshold
(plus the one-insert window before the post-insert check), which also caps
the live load the manager can hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .advanced import AdvancedPolicy
from .hashing import HashOracle, derive_seed
from .params import Mode, ParamSet, RangeError
from .table import InsertResult, InsertStatus, SlotState, Table


class RebuildFailedError(RuntimeError):
    """Rebuild kept failing across fresh seeds; the configuration is wrong."""


@dataclass(frozen=True)
class DeletionConfig:
    epsilon_prime: float
    rebuild_threshold: int  # augmented count that triggers a rebuild
    max_rebuild_attempts: int = 3


@dataclass(frozen=True)
class RebuildReport:
    probes: int
    attempts: int
    reason: str


@dataclass
class RebuildLog:
    """Counters across the manager's lifetime."""

    rebuild_count: int = 0
    rebuild_probe_cost: int = 0
    trigger_augmented_counts: list[int] = field(default_factory=list)


class DeletionManager:
    """Insert/delete/query facade over an advanced-policy table.

    Owns the table, the policy, and the rebuild machinery.  Seeds for the
    oracle, the eviction randomness, and each rebuild generation are all
    derived deterministically from one run seed.
    """

    def __init__(
        self,
        params: ParamSet,
        seed: int,
        *,
        choice_mode: str = "stored",
        failure_c2: float = 12.0,
        max_rebuild_attempts: int = 3,
    ):
        if params.mode is not Mode.ADVANCED:
            raise ValueError("deletions require advanced-mode parameters")
        epsilon_prime = math.exp(params.alpha) * params.epsilon
        if epsilon_prime >= 1.0:
            raise RangeError(
                f"epsilon' = e^alpha * epsilon = {epsilon_prime:.4g} leaves no "
                "usable load range"
            )
        self.params = params
        self.seed = seed
        self.choice_mode = choice_mode
        self.failure_c2 = failure_c2
        self.config = DeletionConfig(
            epsilon_prime=epsilon_prime,
            rebuild_threshold=math.ceil((1.0 - epsilon_prime) * params.n),
            max_rebuild_attempts=max_rebuild_attempts,
        )
        self.log = RebuildLog()
        self.locate_probes = 0
        self._generation = 0
        self._retired_probes = 0
        self._retired_ftp = 0
        self._attempt_probes = 0
        self.table: Table
        self.policy: AdvancedPolicy
        self._install(self._generation, None)

    # -- construction -------------------------------------------------------

    def _install(self, generation: int, keys: list[int] | None) -> bool:
        """Build a fresh table for ``generation``, re-inserting ``keys``.

        Commits the new table/policy and returns True on success; returns
        False when the re-insertion itself failed (the attempt's probe cost
        still lands in ``_attempt_probes``).
        """
        oracle = HashOracle(
            derive_seed(self.seed, 101 + 2 * generation), self.params.n, self.params.d
        )
        table = Table(self.params, oracle, choice_mode=self.choice_mode)
        policy = AdvancedPolicy(
            table,
            failure_c2=self.failure_c2,
            type1_seed=derive_seed(self.seed, 102 + 2 * generation),
        )
        ok = True
        if keys:
            for k in keys:
                if policy.insert_unique(k).status is InsertStatus.FAILED:
                    ok = False
                    break
        self._attempt_probes = table.metrics.probes_total
        if ok:
            self.table = table
            self.policy = policy
        return ok

    # -- public operations ---------------------------------------------------

    def insert(self, x: int) -> InsertResult:
        """Insert x; un-marks an existing tombstone of x in place.

        Runs the rebuild check afterwards, and converts an insertion failure
        into an immediate rebuild.
        """
        loc = self._locate(x)
        if loc is not None:
            j, st = loc
            if st == SlotState.OCCUPIED:
                return InsertResult(InsertStatus.ALREADY_PRESENT)
            # Reinsert of a deleted key: same slot, just un-marked.
            self.table.unmark(j)
            return InsertResult(InsertStatus.PLACED, 0)
        res = self.policy.insert_unique(x)
        if res.status is InsertStatus.FAILED:
            self._rebuild("failure")
            res = InsertResult(InsertStatus.PLACED, res.chain_length)
        self.maybe_rebuild()
        return res

    def delete(self, x: int) -> bool:
        """Tombstone x.  False when absent (a tombstone counts as absent)."""
        loc = self._locate(x)
        if loc is None or loc[1] != SlotState.OCCUPIED:
            return False
        self.table.mark_deleted(loc[0])
        return True

    def query(self, x: int, record: bool = False) -> tuple[int | None, int]:
        return self.policy.query(x, record)

    def maybe_rebuild(self) -> RebuildReport | None:
        """Rebuild when the augmented load has reached 1 - epsilon'."""
        if self.table.augmented_count < self.config.rebuild_threshold:
            return None
        self.log.trigger_augmented_counts.append(self.table.augmented_count)
        return self._rebuild("threshold")

    # -- internals ------------------------------------------------------------

    def _locate(self, x: int) -> tuple[int, SlotState] | None:
        loc = self.policy.locate_resident(x)
        # Cost accounting: a miss scans all d_max indices, a hit stops at
        # its slot's position in the descending order.
        self.locate_probes += self.table.d_max
        return loc

    def _rebuild(self, reason: str) -> RebuildReport:
        old = self.table
        keys = old.live_keys()
        pending = old.pending_eviction
        if pending is not None and not pending.tombstone:
            keys.append(pending.key)
        self._retired_probes += old.metrics.probes_total
        self._retired_ftp += old.metrics.first_time_probes_total

        cost = 0
        for attempt in range(1, self.config.max_rebuild_attempts + 1):
            self._generation += 1
            ok = self._install(self._generation, keys)
            cost += self._attempt_probes
            if ok:
                self.log.rebuild_count += 1
                self.log.rebuild_probe_cost += cost
                # Failed attempts' probes must not vanish from the totals.
                self._retired_probes += cost - self.table.metrics.probes_total
                if self.table.augmented_count >= self.config.rebuild_threshold:
                    raise RebuildFailedError(
                        f"live load {self.table.live_load:.4f} already at the "
                        f"rebuild threshold 1 - epsilon' = "
                        f"{1 - self.config.epsilon_prime:.4f}"
                    )
                return RebuildReport(probes=cost, attempts=attempt, reason=reason)
        raise RebuildFailedError(
            f"rebuild failed {self.config.max_rebuild_attempts} times "
            f"({len(keys)} live keys, n={self.params.n})"
        )

    # -- accounting -------------------------------------------------------------

    @property
    def total_probes(self) -> int:
        """Slot inspections across all table generations, rebuilds included."""
        return self._retired_probes + self.table.metrics.probes_total

    @property
    def total_ftp(self) -> int:
        return self._retired_ftp + self.table.metrics.first_time_probes_total
