import pytest

from bubbleup.params import Mode, ParamSet


class MappingOracle:
    """Oracle with prescribed hash values, for targeted protocol tests.

    ``table`` maps (key, index) -> slot; unlisted pairs fall back to a
    deterministic filler value.
    """

    def __init__(self, n: int, d: int, table: dict):
        self.n = n
        self.d = d
        self._table = dict(table)

    def hash(self, x: int, i: int) -> int:
        if not 1 <= i <= self.d:
            raise IndexError(f"hash index {i} outside [1, {self.d}]")
        return self._table.get((x, i), (x * 31 + i * 7) % self.n)

    def hashes_up_to(self, x: int, k: int):
        if not 1 <= k <= self.d:
            raise IndexError(f"hash count {k} outside [1, {self.d}]")
        return tuple(self.hash(x, i) for i in range(1, k + 1))


def toy_params(n=64, d=6, d_core=3, mode=Mode.ADVANCED, epsilon=2**-4, alpha=1.0):
    """Hand-built ParamSet for slot-level tests (bypasses derivation gates)."""
    return ParamSet(
        n=n,
        epsilon=epsilon,
        alpha=alpha,
        d=d,
        d_core=d_core,
        epsilon_core=0.05,
        gamma=d % d_core,
        mode=mode,
    )


@pytest.fixture
def mapping_oracle():
    return MappingOracle


@pytest.fixture
def make_toy_params():
    return toy_params
