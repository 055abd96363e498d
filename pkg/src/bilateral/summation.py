"""Prefix sums with error-free transforms.

Float prefix sums are carried as unevaluated pairs ``hi + lo`` (double-double),
which gives roughly twice the working precision.  Integer-valued inputs are
summed exactly in int64 with ``lo`` identically zero, so the same pair
arithmetic applies to both.
"""
from __future__ import annotations

import numpy as np

_EXACT_LIMIT = 2.0 ** 52


def two_sum(a, b):
    """Knuth's TwoSum: ``s + e == a + b`` exactly with ``s = fl(a + b)``."""
    s = a + b
    bp = s - a
    e = (a - (s - bp)) + (b - bp)
    return s, e


def is_integral(values: np.ndarray) -> bool:
    """True when every value is an integer and window sums cannot overflow."""
    if values.dtype.kind in "iu":
        return True
    if values.size == 0:
        return True
    if not np.all(np.isfinite(values)):
        return False
    bound = float(np.max(np.abs(values))) * max(values.size, 1)
    return bound < _EXACT_LIMIT and bool(np.all(values == np.round(values)))


def prefix_sums(values, exact: bool | None = None):
    """Return ``(hi, lo)`` with ``hi[m] + lo[m] = sum(values[:m])``, ``m = 0..len``."""
    values = np.asarray(values)
    if exact is None:
        exact = is_integral(values)
    if exact:
        v = values.astype(np.int64)
        hi = np.zeros(v.size + 1, dtype=np.int64)
        np.cumsum(v, out=hi[1:])
        return hi, np.zeros_like(hi)
    x = values.astype(np.float64)
    s = np.cumsum(x)
    prev = np.empty_like(s)
    if s.size:
        prev[0] = 0.0
        prev[1:] = s[:-1]
    if not np.array_equal(prev + x, s, equal_nan=True):
        s = _sequential_sums(x)
        prev[1:] = s[:-1]
    _, err = two_sum(prev, x)
    hi, lo = two_sum(s, np.cumsum(err))
    return np.concatenate(([0.0], hi)), np.concatenate(([0.0], lo))


def _sequential_sums(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    acc = 0.0
    for i, v in enumerate(x):
        acc += v
        out[i] = acc
    return out


def dd_add(h1, l1, h2, l2):
    s, e = two_sum(h1, h2)
    return two_sum(s, e + (l1 + l2))


def dd_sub(h1, l1, h2, l2):
    return dd_add(h1, l1, -h2, -l2)


def dd_value(h, l):
    return h + l
