"""Seeded stand-in for d fully independent, fully random hash functions.

``HashOracle`` maps an opaque 64-bit key x and an index i in [1, d] to a slot
in [0, n) via a keyed 64-bit mixing function followed by a multiply-high
range reduction.  It is a pure function of (seed, x, i), which is what makes
every experiment in this package replayable from a single seed.

Arbitrary byte-string keys are reduced to 64 bits with ``key_from_bytes``;
``key_stream`` produces deterministic streams of distinct 64-bit keys for
workload generation.
"""

from __future__ import annotations

import hashlib
from typing import Iterator

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """64-bit finalizer with full avalanche (splitmix-style); bijective."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def key_from_bytes(data: bytes) -> int:
    """Reduce an arbitrary byte string to an opaque 64-bit key."""
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def key_stream(seed: int, count: int) -> Iterator[int]:
    """Yield ``count`` distinct pseudorandom 64-bit keys.

    Distinctness is structural: mix64 is a bijection applied to distinct
    inputs (GOLDEN is odd, so i * GOLDEN mod 2^64 never repeats).
    """
    base = mix64(seed ^ 0xA076_1D64_78BD_642F)
    for i in range(count):
        yield mix64((base + i * GOLDEN) & MASK64)


def derive_seed(seed: int, stream: int) -> int:
    """Derive an independent 64-bit subseed for a named stream."""
    return mix64((seed & MASK64) ^ mix64(stream * GOLDEN))


class HashOracle:
    """d seeded hash functions h_1..h_d from 64-bit keys to [0, n).

    Stateless after construction; safe to share between readers.
    """

    __slots__ = ("seed", "n", "d", "_subseeds")

    def __init__(self, seed: int, n: int, d: int):
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        if d < 1:
            raise ValueError(f"d must be positive, got {d}")
        self.seed = seed & MASK64
        self.n = n
        self.d = d
        # One well-mixed subseed per hash index; index 0 is a pad so the
        # tuple can be indexed directly by i.
        self._subseeds = tuple(
            mix64(self.seed ^ mix64((i * GOLDEN) & MASK64)) for i in range(d + 1)
        )

    def hash(self, x: int, i: int) -> int:
        """Slot index h_i(x) in [0, n)."""
        if not 1 <= i <= self.d:
            raise IndexError(f"hash index {i} outside [1, {self.d}]")
        # mix64 inlined; keep in sync with it (hot path).
        z = (x & MASK64) ^ self._subseeds[i]
        z = ((z ^ (z >> 30)) * _M1) & MASK64
        z = ((z ^ (z >> 27)) * _M2) & MASK64
        # Multiply-high reduction: floor(z * n / 2^64).  Bias is below
        # n / 2^64, far beneath anything a desk-scale test can detect, and
        # needs no power-of-two n.
        return ((z ^ (z >> 31)) * self.n) >> 64

    def hashes_up_to(self, x: int, k: int) -> tuple[int, ...]:
        """(h_1(x), ..., h_k(x)); prefixes are consistent across calls."""
        if not 1 <= k <= self.d:
            raise IndexError(f"hash count {k} outside [1, {self.d}]")
        x &= MASK64
        sub = self._subseeds
        n = self.n
        return tuple((mix64(x ^ sub[i]) * n) >> 64 for i in range(1, k + 1))

    def hash_block(self, xs: np.ndarray, i: int) -> np.ndarray:
        """Vectorized ``hash`` over an array of keys (analysis/test helper).

        Bit-exact against the scalar path; requires n <= 2^31.
        """
        if not 1 <= i <= self.d:
            raise IndexError(f"hash index {i} outside [1, {self.d}]")
        if self.n > (1 << 31):
            raise ValueError("hash_block supports n <= 2^31")
        z = xs.astype(np.uint64, copy=True)
        z ^= np.uint64(self._subseeds[i])
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z ^= z >> np.uint64(31)
        # floor(z * n / 2^64) via 32-bit split; exact, no 128-bit needed.
        n = np.uint64(self.n)
        hi = (z >> np.uint64(32)) * n
        lo = (z & np.uint64(0xFFFFFFFF)) * n
        return ((hi + (lo >> np.uint64(32))) >> np.uint64(32)).astype(np.int64)


class SplitMix:
    """Tiny deterministic stream of 64-bit values (for eviction randomness).

    Kept separate from HashOracle so that table randomness and policy
    randomness never share a stream.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next64(self) -> int:
        self.state = z = (self.state + GOLDEN) & MASK64
        z = ((z ^ (z >> 30)) * _M1) & MASK64
        z = ((z ^ (z >> 27)) * _M2) & MASK64
        return z ^ (z >> 31)

    def below(self, m: int) -> int:
        """Uniform integer in [0, m); modulo bias is 2^-64 scale for tiny m."""
        return self.next64() % m
