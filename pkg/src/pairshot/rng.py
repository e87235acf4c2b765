"""Deterministic random number generation for every sampling decision.

Every place in this package that makes a random choice (data sampling,
batch order, pair generation, weight init) goes through :class:`Rng`, a
SplitMix64 generator implemented here in full.  The algorithm is pinned
so that a given seed produces the same stream on every platform and
Python version; nothing is delegated to ``random`` or to numpy's bit
generators, whose streams we do not control.

Reference constants are the widely published SplitMix64 ones
(gamma 0x9E3779B97F4A7C15 and the two finalizer multipliers).
"""

from __future__ import annotations

from typing import Iterable, Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

T = TypeVar("T")


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


class Rng:
    """SplitMix64 stream with Fisher-Yates based sampling helpers."""

    __slots__ = ("_seed", "_state")

    def __init__(self, seed: int) -> None:
        self._seed = seed & _MASK64
        self._state = self._seed

    def next_u64(self) -> int:
        """Advance the stream and return the next 64-bit output."""
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        # Largest multiple of n that fits in 64 bits; reject draws above it.
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            draw = self.next_u64()
            if draw < limit:
                return draw % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def shuffled(self, items: Iterable[T]) -> list[T]:
        out = list(items)
        self.shuffle(out)
        return out

    def sample(self, items: Sequence[T], k: int) -> list[T]:
        """k distinct elements, uniformly without replacement, in draw order."""
        n = len(items)
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} items from {n}")
        indices = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            indices[i], indices[j] = indices[j], indices[i]
        return [items[indices[i]] for i in range(k)]

    def choice(self, items: Sequence[T]) -> T:
        if not items:
            raise ValueError("cannot choose from an empty sequence")
        return items[self.randbelow(len(items))]

    def derive(self, *tags: int | str) -> "Rng":
        """Child generator whose stream is independent of this one.

        The child seed mixes the parent seed (not the evolving state, so
        derivation order does not matter) with a hash of the tags.
        """
        h = self._seed
        for tag in tags:
            if isinstance(tag, int):
                data = tag.to_bytes(16, "little", signed=True)
            else:
                data = tag.encode("utf-8")
            h = (h ^ _fnv1a64(data)) & _MASK64
            # One scramble round so successive tags do not commute.
            z = (h + _GAMMA) & _MASK64
            z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
            z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
            h = z ^ (z >> 31)
        return Rng(h)
