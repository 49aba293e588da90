"""Recovery of an element's hash-index from its slot, without stored metadata.

When no per-slot choice byte is kept, the index of the hash function housing
an element x at slot j is recomputed by scanning hash indices downward:

    choice'(x, j) = max { i <= d_max : h_i(x) = j }

This agrees with the true index except for *corrupt* elements, whose hashes
collide between a non-core index and some higher index.  The insertion policy
neutralizes those by routing any scan probe whose non-core hash collides with
one of the element's core hashes straight into the core (``core_collision_check``),
without inspecting the slot.

All functions here are pure reads of the hash oracle: they never touch table
state or probe accounting.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ChoiceProbeReport:
    """Result of one choice recovery: the index found (or None) and the
    number of hash evaluations spent finding it."""

    result: int | None
    hash_evaluations: int


def choice_prime(oracle, x: int, j: int, d_max: int) -> ChoiceProbeReport:
    """Largest i <= d_max with h_i(x) = j, scanning from d_max downward.

    j need not actually hold x; a None result signals that slot j is not
    reachable by x at all.
    """
    h = oracle.hash
    evals = 0
    for i in range(d_max, 0, -1):
        evals += 1
        if h(x, i) == j:
            return ChoiceProbeReport(result=i, hash_evaluations=evals)
    return ChoiceProbeReport(result=None, hash_evaluations=evals)


def is_corrupt(oracle, x: int, d_max: int, d_core: int) -> bool:
    """True iff some h_i1(x) = h_i2(x) with i1 <= d_max - d_core and i1 < i2.

    Exactly the elements for which recomputed choice can disagree with the
    placement index in a way the policies care about.
    """
    hashes = oracle.hashes_up_to(x, d_max)
    cut = d_max - d_core
    seen: set[int] = set()
    for i1 in range(cut):  # zero-based: indices 1..cut
        if hashes[i1] in hashes[i1 + 1 :]:
            return True
        seen.add(hashes[i1])
    return False


def core_hashes(oracle, x: int, d_max: int, d_core: int) -> tuple[int, ...]:
    """(h_{d_max-d_core+1}(x), ..., h_{d_max}(x)); evaluations, not probes."""
    h = oracle.hash
    return tuple(h(x, i) for i in range(d_max - d_core + 1, d_max + 1))


def core_collision_check(
    oracle, x: int, i: int, d_max: int, d_core: int, _core: tuple[int, ...] | None = None
) -> bool:
    """True iff h_i(x) equals one of x's core-range hashes.

    Used during the advanced scan (i <= d_max - d_core): on a collision the
    element is placed into the core immediately, without inspecting slot
    h_i(x).  ``_core`` lets a scan reuse one set of core hashes.
    """
    if i > d_max - d_core:
        raise IndexError(f"index {i} is already in the core range of d_max={d_max}")
    if _core is None:
        _core = core_hashes(oracle, x, d_max, d_core)
    return oracle.hash(x, i) in _core
