"""Portable seeded randomness for balancing and sampling.

Every stochastic step in the toolkit draws from a SplitMix64 generator so
that results reproduce bit-for-bit on any platform or language that follows
the same recipe (documented in the README):

* state update: ``state += 0x9E3779B97F4A7C15`` (mod 2**64)
* output mix:   ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31`` (all mod 2**64)
* bounded draws use rejection sampling, shuffles are Fisher-Yates from the
  top, and without-replacement sampling takes the first-k prefix of a
  Fisher-Yates permutation.

A single run seed fans out to named substreams (``substream``) by hashing
``"{seed}:{label}"`` with SHA-256, so adding a new stochastic step never
perturbs existing ones.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator; tiny, seedable, and portable."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        # Largest multiple of n that fits in 64 bits; draws at or above it
        # are rejected so every residue is equally likely.
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n): the first-k prefix of a
        Fisher-Yates permutation, in draw order."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        swapped: dict[int, int] = {}
        picked = []
        for i in range(k):
            j = i + self.below(n - i)
            picked.append(swapped.get(j, j))
            swapped[j] = swapped.get(i, i)
        return picked


def substream(seed: int, label: str) -> SplitMix64:
    """Independent generator for one named stochastic step of a run."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return SplitMix64(int.from_bytes(digest[:8], "big"))
