"""Counter-based SplitMix64 streams.

Word ``i`` (0-based) of the stream with key ``k`` is::

    mix64(k + (i + 1) * 0x9E3779B97F4A7C15  mod 2**64)

which is exactly the output sequence of the reference SplitMix64 generator
seeded with ``k``.  Because any word can be computed directly from its
counter, independent sub-streams (one per row, per trial, ...) are derived with
:func:`derive_key` and evaluated in any order or in parallel with identical
results on every platform.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *path: int) -> int:
    """Key of the sub-stream reached from ``seed`` by following ``path``."""
    key = seed & MASK64
    for p in path:
        key = mix64(key + ((p & MASK64) + 1) * GAMMA)
    return key


def word(key: int, counter: int) -> int:
    return mix64(key + (counter + 1) * GAMMA)


def words(key, counters) -> np.ndarray:
    """Vectorized :func:`word`; ``key`` and ``counters`` broadcast as uint64 arrays."""
    k = np.asarray(key, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = k + (c + np.uint64(1)) * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_keys(seed: int, prefix: tuple[int, ...], last) -> np.ndarray:
    """``derive_key(seed, *prefix, j)`` for every ``j`` in the array ``last``."""
    base = derive_key(seed, *prefix)
    return words(base, np.asarray(last, dtype=np.uint64))


def coin_bits(key: int, count: int) -> np.ndarray:
    """``count`` fair coins: the top bit of each stream word."""
    return (words(key, np.arange(count, dtype=np.uint64)) >> np.uint64(63)).astype(np.uint8)


def below(w: int, bound: int) -> int:
    """Map a 64-bit word to ``[0, bound)`` by multiply-shift."""
    return (w * bound) >> 64


def permutation(key: int, n: int) -> list[int]:
    """Fisher-Yates shuffle of ``range(n)`` driven by stream ``key``."""
    out = list(range(n))
    for step, i in enumerate(range(n - 1, 0, -1)):
        j = below(word(key, step), i + 1)
        out[i], out[j] = out[j], out[i]
    return out
