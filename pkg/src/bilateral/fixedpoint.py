"""Unsigned 64-bit fixed-point fractions of a turn and a counter-based hash."""
from __future__ import annotations

from math import isqrt

import numpy as np

ONE = 1 << 64
MASK64 = ONE - 1
SCALE = 2.0 ** -64


def _golden() -> int:
    # 4 * 2**64 * (sqrt(5) - 1) / 2, rounded to nearest, then forced odd
    four_x = isqrt(5 << 130) - (1 << 65)
    alpha = (four_x + 2) >> 2
    return alpha | 1


GOLDEN_ALPHA = _golden()


def from_turns(t: float) -> int:
    """Nearest fixed-point value to ``t`` turns (reduced mod 1)."""
    return int(round((t % 1.0) * ONE)) & MASK64


def to_turns(x):
    """Real image in [0, 1) of a fixed-point value or uint64 array."""
    if isinstance(x, np.ndarray):
        return x.astype(np.float64) * SCALE
    return (int(x) & MASK64) * SCALE


def make_odd(x: int) -> int:
    return (int(x) & MASK64) | 1


_BYTE_REV = np.array([int(f"{b:08b}"[::-1], 2) for b in range(256)], dtype=np.uint8)


def bit_reverse64(x: np.ndarray) -> np.ndarray:
    """Reverse the 64 bits of every element of a uint64 array."""
    x = np.ascontiguousarray(x, dtype=np.uint64)
    b = x.view(np.uint8).reshape(-1, 8)
    out = _BYTE_REV[b[:, ::-1]]
    return np.ascontiguousarray(out).view(np.uint64).reshape(x.shape)


# SplitMix64 finalizer constants
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash64(key, counter) -> np.ndarray:
    """Keyed counter-based hash: a pseudorandom function of (key, counter).

    ``counter`` may be negative; it is taken modulo 2**64.  Both arguments
    broadcast.
    """
    key = np.asarray(key)
    counter = np.asarray(counter)
    if key.dtype != np.uint64:
        key = key.astype(np.int64).astype(np.uint64) if key.dtype.kind == "i" else key.astype(np.uint64)
    if counter.dtype != np.uint64:
        counter = counter.astype(np.int64).astype(np.uint64)
    k = mix64(key ^ _GAMMA)
    with np.errstate(over="ignore"):
        return mix64(mix64(counter * _GAMMA + k) ^ k)


def hash_uniform(key, counter) -> np.ndarray:
    """Uniform doubles in [0, 1) from :func:`hash64` (53 random bits)."""
    return (hash64(key, counter) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def derive_seed(*parts: int) -> int:
    """Combine integers into one 64-bit seed, deterministically."""
    h = np.uint64(0x243F6A8885A308D3)
    for p in parts:
        h = hash64(h, np.uint64(int(p) & MASK64))
    return int(h)
