"""Deterministic, serializable random number generation.

Every stochastic component (maze traversal, action selection, replay
sampling, serving) draws from its own SplitMix64 stream.  The full state of
a stream is a single integer, which makes checkpointing trivial and lets the
numba traversal kernel reproduce the exact same sequence.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2^-53: top 53 bits of a u64 map to a uniform double in [0, 1)
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """Finalizer of SplitMix64; also used for stable seed derivation."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int | str) -> int:
    """Stable child seed from a master seed and a label path.

    Not salted (unlike ``hash``): the same inputs give the same seed in
    every process, which the difficulty cache and checkpoints rely on.
    """
    h = mix64((master & MASK64) ^ 0xD6E8FEB86659FD93)
    for part in parts:
        if isinstance(part, str):
            for b in part.encode():
                h = mix64(h ^ b)
        else:
            h = mix64(h ^ (part & MASK64))
    return h


class SplitMix64:
    """Tiny 64-bit PRNG with single-integer state."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform float64 in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n).  n must be small (modulo bias ~n/2^64)."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return self.next_u64() % n

    def getstate(self) -> int:
        return self.state

    def setstate(self, state: int) -> None:
        self.state = state & MASK64
