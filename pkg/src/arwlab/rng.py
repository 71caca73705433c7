"""Counter-based random numbers keyed by (seed, stream, coordinates, index).

Every draw is a pure function of its key, so the same instruction tape can be
re-read under any topple order and per-trial streams never depend on how
trials are split across workers.  The mixer is the SplitMix64 finalizer
applied in a cascade, one round per key word.
"""
from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_COORD_OFFSET = 1 << 31

# stream tags keep independent uses of one seed apart
STREAM_TAPE = 1
STREAM_POLICY = 2
STREAM_SELECT = 3
STREAM_TRIAL = 4
STREAM_WALK = 5
STREAM_FLAG = 6
STREAM_GHOST = 7
STREAM_INIT = 8


@njit(cache=True, inline="always")
def mix64(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def key2(seed, stream):
    return mix64(mix64(np.uint64(seed)) ^ np.uint64(stream))


@njit(cache=True, inline="always")
def absorb(h, word):
    """Fold one signed integer word into hash state ``h``."""
    return mix64(h ^ np.uint64(np.int64(word) + np.int64(2147483648)))


@njit(cache=True, inline="always")
def to_unit(h):
    """Top 53 bits of ``h`` as a float in [0, 1)."""
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def uniform_1(seed, stream, a):
    return to_unit(absorb(key2(seed, stream), a))


@njit(cache=True)
def uniform_2(seed, stream, a, b):
    return to_unit(absorb(absorb(key2(seed, stream), a), b))


@njit(cache=True)
def uniform_3(seed, stream, a, b, c):
    return to_unit(absorb(absorb(absorb(key2(seed, stream), a), b), c))


# Pure-python twins, used where numba dispatch overhead would dominate or
# where the caller is itself plain python.

def _mix64_py(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def hash_key(seed: int, stream: int, *words: int) -> int:
    h = _mix64_py(_mix64_py(seed & MASK64) ^ stream)
    for w in words:
        h = _mix64_py(h ^ ((w + _COORD_OFFSET) & MASK64))
    return h


def unit(seed: int, stream: int, *words: int) -> float:
    """Uniform [0, 1) draw for the given key; matches the jitted helpers."""
    return (hash_key(seed, stream, *words) >> 11) * (1.0 / 9007199254740992.0)


def derive_seed(seed: int, *words: int) -> int:
    """Child seed for trial ``words``; independent of worker layout."""
    return hash_key(seed, STREAM_TRIAL, *words) & ((1 << 63) - 1)


def numpy_generator(seed: int, *words: int) -> np.random.Generator:
    """A numpy Generator whose state is a pure function of (seed, words)."""
    return np.random.Generator(np.random.Philox(derive_seed(seed, *words)))
