"""Counter-based 64-bit hashing used for addressable random draws.

The generator is the SplitMix64 output function applied to a counter, so draw
number ``k`` under key ``s`` is ``finalize(mix(s) + (k + 1) * GOLDEN)`` and can
be computed without touching draws ``0 .. k-1``.
"""

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def finalize(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def key_of(seed: int) -> int:
    return finalize((seed & MASK64) + GOLDEN)


def draw(seed: int, counter: int) -> int:
    """The ``counter``-th 64-bit output of the stream keyed by ``seed``."""
    return finalize(key_of(seed) + (counter + 1) * GOLDEN)


def mix(master_seed: int, index: int) -> int:
    """Derive an independent 64-bit seed for replicate ``index``."""
    return finalize(key_of(master_seed) ^ key_of(index ^ 0x5851F42D4C957F2D))


def bernoulli_threshold(p: float) -> int:
    """Integer threshold T with P(u53 < T) = p for u53 uniform on [0, 2^53)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    t = p * 2.0**53  # exact: scaling by a power of two
    ti = int(t)
    return ti if ti == t else ti + 1


@nb.njit(cache=True)
def _finalize_u64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def bernoulli_matrix(n, key, threshold):
    """theta[i, j] = 1 iff (draw(i * n + j) >> 11) < threshold."""
    out = np.empty((n, n), dtype=np.uint8)
    g = np.uint64(GOLDEN)
    k = np.uint64(key)
    thr = np.uint64(threshold)
    sh = np.uint64(11)
    for i in range(n):
        base = np.uint64(i) * np.uint64(n)
        for j in range(n):
            c = base + np.uint64(j) + np.uint64(1)
            z = _finalize_u64(k + c * g)
            out[i, j] = 1 if (z >> sh) < thr else 0
    return out
