"""Pinned randomness for reproducible campaigns.

Protocol randomness comes from :class:`Stream`, a counter-mode SplitMix64
generator: output ``i`` of the stream with seed ``s`` is
``mix64(s + (i + 1) * 0x9E3779B97F4A7C15 mod 2^64)`` where ``mix64`` is the
SplitMix64 finalizer. Blocks are produced by the kernel backend, and both
backends give identical words.

Child seeds are ``mix64(mix64(parent ^ 0xD1B54A32D192ED03) + (i + 1) * gamma)``.
For a fixed parent this is a bijection of ``i``, so children never collide.

Changing anything here changes every transcript; bump ``RNG_ALGORITHM`` if
you do.
"""

from __future__ import annotations

import numpy as np

from otlab import kernels

RNG_ALGORITHM = "splitmix64-counter/v1"

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_DOMAIN = 0xD1B54A32D192ED03


def splitmix64(z: int) -> int:
    """SplitMix64 finalizer (a bijection on 64-bit integers)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(parent: int, index: int) -> int:
    """Seed of child stream ``index`` under ``parent``."""
    if parent < 0 or index < 0:
        raise ValueError("seeds and indices must be non-negative")
    base = splitmix64(parent ^ _DOMAIN)
    return splitmix64(base + (index + 1) * GAMMA)


class Stream:
    """A cheap, reproducible stream of 64-bit words."""

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def raw(self, size: int) -> np.ndarray:
        out = kernels.splitmix_block(self.seed, self.counter, size)
        self.counter += size
        return out

    def coins(self, size: int) -> np.ndarray:
        """Fair bits (top bit of each word) as uint8."""
        return (self.raw(size) >> np.uint64(63)).astype(np.uint8)

    def uniform(self, size: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def child(self, index: int) -> "Stream":
        return Stream(derive_seed(self.seed, index))

    def __repr__(self):
        return f"Stream(seed={self.seed:#x}, counter={self.counter})"


def make_rng(seed: int) -> Stream:
    return Stream(seed)


def raw(rng: Stream, size: int) -> np.ndarray:
    return rng.raw(size)


def coins(rng: Stream, size: int) -> np.ndarray:
    return rng.coins(size)


def guess_threshold(prob: float) -> int:
    """Threshold on the low 63 bits of a word that fires with probability ``prob``."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError("guess probability must lie in [0, 1]")
    return min(int(prob * 2.0**63), 1 << 63)
