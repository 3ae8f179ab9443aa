"""Counter-based random streams.

Every random number used by the package is a pure function of a tuple of
64-bit key words (master seed, stream tag, sample index, lane, counter).
Keys are folded through the splitmix64 finalizer, which is vectorized over
the last key word, so draws are bit-reproducible regardless of execution
order or worker count.
"""

from __future__ import annotations

import numpy as np

_SEED0 = np.uint64(0x243F6A8885A308D3)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = 0xFFFFFFFFFFFFFFFF

# stream tags, one per consumer of randomness
STREAM_COEFFICIENTS = 1
STREAM_DATA_PHASE = 2
STREAM_DATA_DIRECTION = 3


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _as_u64(word) -> np.ndarray:
    arr = np.asarray(word)
    if arr.dtype.kind == "f":
        raise TypeError("rng key words must be integers")
    if arr.dtype == np.uint64:
        return arr
    if arr.ndim == 0:
        return np.uint64(int(arr) & _U64_MASK)
    return arr.astype(np.int64).view(np.uint64)


def fold(*words) -> np.ndarray:
    """Fold key words into mixed 64-bit words; array words broadcast.

    All arithmetic is intentionally mod 2^64."""
    state = _SEED0
    with np.errstate(over="ignore"):
        for w in words:
            state = _finalize(state + _GOLDEN + _as_u64(w))
    return state


def uniform_open01(words: np.ndarray) -> np.ndarray:
    """Map mixed words to (0, 1]; never 0, safe under log."""
    return ((words >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def uniform01(words: np.ndarray) -> np.ndarray:
    """Map mixed words to [0, 1)."""
    return (words >> np.uint64(11)).astype(np.float64) * 2.0**-53


def standard_gaussian(words0: np.ndarray, words1: np.ndarray) -> np.ndarray:
    """Box-Muller from two independent word lanes."""
    u1 = uniform_open01(words0)
    u2 = uniform01(words1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def rademacher(words: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * (words >> np.uint64(63)).astype(np.float64)


def uniform_symmetric(words: np.ndarray) -> np.ndarray:
    return 2.0 * uniform01(words) - 1.0
