"""SplitMix64 counter-based random streams.

SplitMix64 (Steele, Lea & Flood, 2014) advances its state by the golden-ratio
increment and whitens it with two xor-shift-multiply rounds. Because the state
after ``k`` steps is simply ``seed + k * GAMMA`` (mod 2**64), any word of the
stream can be computed independently, which keeps the generators below
bit-identical regardless of how the work is chunked.
"""

from __future__ import annotations

import numba
import numpy as np

GENERATOR_NAME = "splitmix64"

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

PHASE_BITS = 16
PHASE_LEVELS = 1 << PHASE_BITS
_angles = 2.0 * np.pi * np.arange(PHASE_LEVELS) / PHASE_LEVELS
COS_TABLE = np.cos(_angles)
SIN_TABLE = np.sin(_angles)
del _angles


def words(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Return ``count`` stream words beginning at word index ``start``."""
    k = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + k * GAMMA
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Uniform doubles on [0, 1) from the top 53 bits of each word."""
    return (words(seed, count, start) >> np.uint64(11)).astype(np.float64) * 2.0**-53


@numba.njit(cache=True)
def _phasor_intensity(seed, height, width, n, cos_t, sin_t):
    out = np.empty((height, width))
    per_pixel = (n + 3) // 4
    mask = np.uint64(0xFFFF)
    gamma = np.uint64(0x9E3779B97F4A7C15)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    state = np.uint64(seed)
    for y in range(height):
        for x in range(width):
            re = 0.0
            im = 0.0
            remaining = n
            for _ in range(per_pixel):
                state += gamma
                z = state
                z = (z ^ (z >> np.uint64(30))) * m1
                z = (z ^ (z >> np.uint64(27))) * m2
                z = z ^ (z >> np.uint64(31))
                take = 4 if remaining >= 4 else remaining
                for k in range(take):
                    idx = (z >> np.uint64(16 * k)) & mask
                    re += cos_t[idx]
                    im += sin_t[idx]
                remaining -= take
            out[y, x] = (re * re + im * im) / n
    return out


def phasor_intensity(seed: int, height: int, width: int, n: int) -> np.ndarray:
    """Intensity of a normalized sum of ``n`` unit phasors at every pixel.

    Each pixel consumes ``ceil(n / 4)`` consecutive stream words in row-major
    order; each word supplies four 16-bit phase indices (low bits first).
    """
    return _phasor_intensity(np.uint64(seed), height, width, n, COS_TABLE, SIN_TABLE)
