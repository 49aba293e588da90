"""Parameter derivation and constraint checking for bubble-up cuckoo tables.

A table is configured by (n, epsilon, alpha, d_core):

  n        number of slots
  epsilon  target free-slot fraction at maximum load
  alpha    slack constant in (0, 1]
  d_core   arity of the embedded core table (advanced policy only)

The number of hash functions is derived:

  basic policy     d = ceil(3 ln(1/epsilon)) + 1, with a fixed 2-ary core
  advanced policy  d = ceil(ln(1/epsilon) + alpha), with a d_core-ary core
                   and the phase offset gamma = d mod d_core

The advanced policy additionally needs a core free-slot target epsilon_core
and a handful of numeric inequalities relating (alpha, d_core, epsilon_core)
to hold for its guarantees to be meaningful.  ``validate`` evaluates each of
them and reports a signed margin; ``derive_params`` records the results and,
in strict mode, refuses configurations that fail any of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Mode(str, Enum):
    BASIC = "basic"
    ADVANCED = "advanced"


class RangeError(ValueError):
    """Raised when an input parameter is outside its usable range."""


class ConstraintError(ValueError):
    """Raised in strict mode when a derived parameter set fails validation."""


# Tabulated orientability thresholds c*_d: the asymptotic maximum load factor
# of a d-ary cuckoo table.  Used to keep the core-occupancy bound 1 -
# epsilon_core on the operable side of the d_core-ary random walk.
LOAD_THRESHOLDS = {2: 0.5, 3: 0.917, 4: 0.976, 5: 0.992, 6: 0.997}

DEFAULT_ALPHA = 1.0
DEFAULT_D_CORE = 5
DEFAULT_EPSILON_CORE_FACTOR = 1.05
DEFAULT_OPERABILITY_MARGIN = 0.8

# Probed-index sets are kept as single-word bitmaps, which caps d.
MAX_HASHES = 32

# epsilon_core for the basic policy's 2-ary core: anything strictly above 1/2
# works since a 2-ary core must stay below half load.
BASIC_EPSILON_CORE = 0.51


@dataclass(frozen=True)
class ConstraintCheck:
    """One named inequality with its evaluated margin (>= 0 means satisfied)."""

    name: str
    passed: bool
    margin: float
    detail: str


@dataclass(frozen=True)
class ParamSet:
    """Fully derived configuration for one table instance."""

    n: int
    epsilon: float
    alpha: float
    d: int
    d_core: int
    epsilon_core: float
    gamma: int
    mode: Mode

    @property
    def final_phase(self) -> int:
        """Index of the last phase (advanced mode), with d_max(final) == d."""
        if self.mode is Mode.BASIC:
            return 1
        return (self.d - self.gamma) // self.d_core

    def d_max_for_phase(self, q: int) -> int:
        if self.mode is Mode.BASIC:
            return self.d
        return self.gamma + q * self.d_core

    def phase_end_load(self, q: int) -> float:
        """Load factor at which phase q ends and d_max grows by d_core."""
        return 1.0 - math.exp(-self.d_max_for_phase(q) + self.alpha)

    def max_load_count(self) -> int:
        """Number of insertions in a fill to load 1 - epsilon."""
        return math.ceil((1.0 - self.epsilon) * self.n)


def _threshold_for(d_core: int) -> float:
    if d_core in LOAD_THRESHOLDS:
        return LOAD_THRESHOLDS[d_core]
    # Thresholds increase with arity; reusing the largest tabulated value is
    # conservative for d_core beyond the table.
    return LOAD_THRESHOLDS[max(LOAD_THRESHOLDS)]


def evaluate_inequalities(
    alpha: float,
    d_core: int,
    epsilon_core: float,
    *,
    operability_margin: float = DEFAULT_OPERABILITY_MARGIN,
    window: int = 64,
) -> list[ConstraintCheck]:
    """Evaluate the advanced-mode parameter inequalities numerically.

    Checks, in order:

      core_arity_decay   j * e^(alpha - j) <= alpha / 8 for j in
                         [d_core, d_core + window].  The function is strictly
                         decreasing for j >= 1, so the window maximum sits at
                         j = d_core and the bound extends to all larger j.
      core_slack         ln(1/epsilon_core) + alpha/8 > d_core * (1 + epsilon_core)
      core_below_half    epsilon_core < 1/2
      core_operability   epsilon_core >= operability_margin * (1 - c*_{d_core}),
                         i.e. the core-occupancy bound 1 - epsilon_core stays
                         near or below the d_core-ary load threshold.

    Pure evaluation: every result is returned, none is enforced.
    """
    checks = []

    worst = max(j * math.exp(alpha - j) for j in range(d_core, d_core + window + 1))
    margin1 = alpha / 8.0 - worst
    checks.append(
        ConstraintCheck(
            name="core_arity_decay",
            passed=margin1 >= 0.0,
            margin=margin1,
            detail=f"max j*e^(a-j) over j in [{d_core},{d_core + window}] is "
            f"{worst:.6g} vs alpha/8 = {alpha / 8.0:.6g} (decreasing beyond j=1)",
        )
    )

    lhs = math.log(1.0 / epsilon_core) + alpha / 8.0
    rhs = d_core * (1.0 + epsilon_core)
    checks.append(
        ConstraintCheck(
            name="core_slack",
            passed=lhs > rhs,
            margin=lhs - rhs,
            detail=f"ln(1/eps_core) + alpha/8 = {lhs:.6g} vs "
            f"d_core*(1+eps_core) = {rhs:.6g}",
        )
    )

    checks.append(
        ConstraintCheck(
            name="core_below_half",
            passed=epsilon_core < 0.5,
            margin=0.5 - epsilon_core,
            detail=f"eps_core = {epsilon_core:.6g}",
        )
    )

    floor = operability_margin * (1.0 - _threshold_for(d_core))
    checks.append(
        ConstraintCheck(
            name="core_operability",
            passed=epsilon_core >= floor,
            margin=epsilon_core - floor,
            detail=f"eps_core = {epsilon_core:.6g} vs "
            f"{operability_margin} * (1 - c*_{d_core}) = {floor:.6g}",
        )
    )

    return checks


def theory_range_check(p: ParamSet, *, deletions: bool = False) -> ConstraintCheck:
    """Report whether epsilon sits in the advanced theory range.

    The guarantees are stated for n^(-1/4) < epsilon <= e^(-d_core); with
    deletions enabled the effective bound is the augmented-load parameter
    epsilon' = e^alpha * epsilon.  Desk-scale experiments routinely run
    outside this range, so this is reported rather than enforced (strict
    builds enforce it).
    """
    eps_eff = math.exp(p.alpha) * p.epsilon if deletions else p.epsilon
    lo = p.n ** -0.25
    hi = math.exp(-p.d_core)
    passed = lo < eps_eff <= hi
    margin = min(eps_eff - lo, hi - eps_eff)
    label = "epsilon'" if deletions else "epsilon"
    return ConstraintCheck(
        name="epsilon_range",
        passed=passed,
        margin=margin,
        detail=f"{label} = {eps_eff:.6g} vs range ({lo:.6g}, {hi:.6g}]",
    )


def validate(
    p: ParamSet,
    *,
    operability_margin: float = DEFAULT_OPERABILITY_MARGIN,
) -> list[ConstraintCheck]:
    """Evaluate the parameter inequalities for a derived ParamSet.

    Pure evaluation; callers decide whether to reject.  Basic-mode sets only
    have a structural check (their 2-ary core needs no inequality tuning).
    The epsilon range report lives in ``theory_range_check``.
    """
    if p.mode is Mode.BASIC:
        return [
            ConstraintCheck(
                name="basic_scan_window",
                passed=p.d >= 4,
                margin=float(p.d - 4),
                detail=f"d = {p.d}; the non-core scan window needs d >= 4",
            )
        ]
    return evaluate_inequalities(
        p.alpha, p.d_core, p.epsilon_core, operability_margin=operability_margin
    )


def derive_params(
    n: int,
    epsilon: float,
    alpha: float = DEFAULT_ALPHA,
    d_core: int = DEFAULT_D_CORE,
    mode: Mode | str = Mode.ADVANCED,
    *,
    epsilon_core_factor: float = DEFAULT_EPSILON_CORE_FACTOR,
    operability_margin: float = DEFAULT_OPERABILITY_MARGIN,
    deletions: bool = False,
    strict: bool = False,
) -> ParamSet:
    """Derive a full ParamSet from (n, epsilon, alpha, d_core).

    Advanced mode sets d = ceil(ln(1/epsilon) + alpha), gamma = d mod d_core
    and epsilon_core = epsilon_core_factor * e^(-d_core).  Basic mode sets
    d = ceil(3 ln(1/epsilon)) + 1 with a fixed 2-ary core.

    Deterministic and pure: identical inputs give identical ParamSets.

    Raises RangeError for inputs that cannot produce a working table
    (epsilon or alpha out of (0,1)/(0,1], n < 16, d_core < 2, a phase
    schedule with no valid phase, or d beyond the bitmap width).  In strict
    mode additionally raises RangeError when epsilon is outside the theory
    range and ConstraintError when any validation check fails.
    """
    mode = Mode(mode)
    if not 0.0 < epsilon < 1.0:
        raise RangeError(f"epsilon must be in (0, 1), got {epsilon}")
    if not 0.0 < alpha <= 1.0:
        raise RangeError(f"alpha must be in (0, 1], got {alpha}")
    if d_core < 2:
        raise RangeError(f"d_core must be >= 2, got {d_core}")
    if n < 16:
        raise RangeError(f"n must be >= 16, got {n}")

    log_inv = math.log(1.0 / epsilon)

    if mode is Mode.BASIC:
        d = math.ceil(3.0 * log_inv) + 1
        if d < 4:
            raise RangeError(
                f"basic mode needs d >= 4 (epsilon={epsilon} gives d={d})"
            )
        if d > MAX_HASHES:
            raise RangeError(f"d = {d} exceeds the supported maximum {MAX_HASHES}")
        return ParamSet(
            n=n,
            epsilon=epsilon,
            alpha=alpha,
            d=d,
            d_core=2,
            epsilon_core=BASIC_EPSILON_CORE,
            gamma=0,
            mode=mode,
        )

    d = math.ceil(log_inv + alpha)
    if d > MAX_HASHES:
        raise RangeError(f"d = {d} exceeds the supported maximum {MAX_HASHES}")
    if d_core < 3:
        # A 2-ary core cannot absorb the first phase's load 1 - e^(-2+alpha).
        raise RangeError(f"advanced mode needs d_core >= 3, got {d_core}")
    if d_core > d:
        raise RangeError(
            f"no valid phase schedule: d_core = {d_core} exceeds d = {d} "
            f"(epsilon={epsilon}, alpha={alpha})"
        )
    gamma = d % d_core
    epsilon_core = epsilon_core_factor * math.exp(-d_core)

    p = ParamSet(
        n=n,
        epsilon=epsilon,
        alpha=alpha,
        d=d,
        d_core=d_core,
        epsilon_core=epsilon_core,
        gamma=gamma,
        mode=mode,
    )

    if strict:
        rng = theory_range_check(p, deletions=deletions)
        if not rng.passed:
            raise RangeError(rng.detail)
        failed = [
            c
            for c in validate(p, operability_margin=operability_margin)
            if not c.passed
        ]
        if failed:
            raise ConstraintError(
                "; ".join(f"{c.name}: {c.detail}" for c in failed)
            )

    return p
