"""d-ary cuckoo hashing with bubble-up insertion policies.

Two insertion policies over one slot store: a basic policy whose top two
hash indices form an embedded 2-ary core, and an advanced policy with a
growing hash ceiling, a d_core-ary random-walk core, and descending-order
queries.  Plus: recomputed-choice operation without per-slot metadata,
tombstone deletions with threshold rebuilds, brute-force statistical
oracles, and a seeded experiment harness.
"""

from .advanced import AdvancedPolicy, PhaseState
from .basic import BasicPolicy
from .choice import ChoiceProbeReport, choice_prime, core_collision_check, is_corrupt
from .deletion import DeletionConfig, DeletionManager, RebuildFailedError
from .harness import ExperimentConfig, RunResult, run
from .hashing import HashOracle, key_from_bytes, key_stream
from .oracles import (
    BipartiteInstance,
    coupon_trial,
    geometric_tail_check,
    instance_from_oracle,
    offline_feasible,
)
from .params import (
    ConstraintError,
    Mode,
    ParamSet,
    RangeError,
    derive_params,
    validate,
)
from .table import (
    ChoiceMode,
    InsertResult,
    InsertStatus,
    Metrics,
    NotFoundError,
    SlotState,
    Table,
    TableFailedError,
)

__version__ = "0.1.0"

__all__ = [
    "AdvancedPolicy",
    "BasicPolicy",
    "BipartiteInstance",
    "ChoiceMode",
    "ChoiceProbeReport",
    "ConstraintError",
    "DeletionConfig",
    "DeletionManager",
    "ExperimentConfig",
    "HashOracle",
    "InsertResult",
    "InsertStatus",
    "Metrics",
    "Mode",
    "NotFoundError",
    "ParamSet",
    "PhaseState",
    "RangeError",
    "RebuildFailedError",
    "RunResult",
    "SlotState",
    "Table",
    "TableFailedError",
    "choice_prime",
    "coupon_trial",
    "core_collision_check",
    "derive_params",
    "geometric_tail_check",
    "instance_from_oracle",
    "is_corrupt",
    "key_from_bytes",
    "key_stream",
    "offline_feasible",
    "run",
    "validate",
]
