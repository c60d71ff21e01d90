"""Deterministic seeded randomness.

Every random object in this package (hash functions, sign assignments,
gaussian entries) is a pure function of a 64-bit key and an integer index,
built on the splitmix64 finalizer.  This lets the decoding side regenerate
the exact random values used at measurement time from the master seed alone,
without storing them, and makes every experiment bit-reproducible across
processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

U64 = np.uint64

_MUL1 = U64(0xBF58476D1CE4E5B9)
_MUL2 = U64(0x94D049BB133111EB)
_GAMMA = U64(0x9E3779B97F4A7C15)
_PHI = U64(0x165667B19E3779F9)


def mix64(z) -> np.ndarray:
    """splitmix64 finalizer; wraps mod 2**64 by construction."""
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = (z ^ (z >> U64(30))) * _MUL1
        z = (z ^ (z >> U64(27))) * _MUL2
        return z ^ (z >> U64(31))


def fold(key, word) -> np.ndarray:
    """Absorb an integer (or integer array) into a key, yielding new key(s).

    Broadcasts over both arguments, so a column of keys folded with a row of
    indices yields the full key matrix in one call.
    """
    with np.errstate(over="ignore"):
        k = np.asarray(key, dtype=np.uint64)
        w = np.asarray(word, dtype=np.uint64)
        return mix64(k ^ (w * _GAMMA + _PHI))


def derive_key(seed: int, *words: int) -> np.uint64:
    """A 64-bit stream key for (seed, words); equal inputs give equal keys."""
    key = mix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    for w in words:
        key = fold(key, int(w) & 0xFFFFFFFFFFFFFFFF)
    return np.uint64(key)


def uniform01(key, idx) -> np.ndarray:
    """Uniform floats in (0, 1), one per index; never exactly 0 or 1."""
    u = fold(key, idx)
    return (u >> U64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def standard_normal(key, idx) -> np.ndarray:
    """Standard normal deviates via the inverse normal CDF."""
    return ndtri(uniform01(key, idx))


def rademacher(key, idx) -> np.ndarray:
    """Signs in {-1, +1} as int8, one per index."""
    return (((fold(key, idx) >> U64(63)).astype(np.int8)) << 1) - np.int8(1)


def uniform_index(key, idx, size: int) -> np.ndarray:
    """Indices in [0, size). Modulo bias is < size/2**64, negligible here."""
    if size < 1:
        raise ValueError(f"range size must be positive, got {size}")
    return (fold(key, idx) % U64(size)).astype(np.int64)


@dataclass(frozen=True)
class RandomSource:
    """A labelled deterministic random stream.

    Identical (seed, label) pairs produce identical streams; distinct labels
    behave independently.  ``derive`` extends the label, which is how
    sub-streams for trials, schemas, and repetitions are carved out.
    """

    seed: int
    label: tuple[int, ...] = ()

    @property
    def key(self) -> np.uint64:
        return derive_key(self.seed, *self.label)

    def derive(self, *words: int) -> "RandomSource":
        return RandomSource(self.seed, self.label + tuple(int(w) for w in words))

    def gaussian(self, idx) -> np.ndarray:
        return standard_normal(self.key, idx)

    def signs(self, idx) -> np.ndarray:
        return rademacher(self.key, idx)

    def indices(self, idx, size: int) -> np.ndarray:
        return uniform_index(self.key, idx, size)

    def uniform(self, idx) -> np.ndarray:
        return uniform01(self.key, idx)

    def choice_without_replacement(self, n: int, count: int) -> np.ndarray:
        """``count`` distinct indices from [0, n), deterministic in the key."""
        if count > n:
            raise ValueError(f"cannot draw {count} distinct values from range {n}")
        # rank the first n outputs of the stream; ties are impossible in
        # practice (64-bit values) and harmless if they occur
        u = fold(self.key, np.arange(n))
        return np.sort(np.argsort(u, kind="stable")[:count])


@dataclass(frozen=True)
class HashFamily:
    """A seeded hash h: [domain] -> [range_size], simulating full independence.

    Realized as a keyed pseudorandom function of (seed, input): full
    independence is free in simulation, and determinism given the seed is
    exactly what lets sketches be decoded without shipping hash tables.
    """

    seed: int
    domain: int
    range_size: int

    @property
    def key(self) -> np.uint64:
        return derive_key(self.seed)

    def __call__(self, idx) -> np.ndarray:
        return uniform_index(self.key, idx, self.range_size)
