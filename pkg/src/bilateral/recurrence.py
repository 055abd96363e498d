"""Rotations on ``Z/m x (R/Z)^d`` and triple-correlation averages.

Torus coordinates are unsigned 64-bit fixed-point fractions, so group
operations wrap exactly.  Characters are evaluated by accumulating integer
phases first and exponentiating once, which makes a product of characters
that multiplies to the trivial character exactly ``1``.
"""
from __future__ import annotations

import json
import math
import cmath
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .dynsys import System
from .errors import InvalidSpec, ResonantFrequency
from .fixedpoint import GOLDEN_ALPHA, MASK64, ONE, SCALE
from .observables import Observable, as_observable


@dataclass(frozen=True)
class KroneckerGroup:
    m: int = 1
    d: int = 1
    alpha_residue: int = 1
    alpha_torus: tuple = (GOLDEN_ALPHA,)

    def __post_init__(self):
        if self.m < 1 or self.d < 0:
            raise InvalidSpec("need m >= 1 and d >= 0")
        object.__setattr__(self, "alpha_torus", tuple(int(a) & MASK64 for a in self.alpha_torus))
        if len(self.alpha_torus) != self.d:
            raise InvalidSpec(f"alpha_torus needs {self.d} components")
        if math.gcd(self.alpha_residue, self.m) != 1:
            raise InvalidSpec("alpha residue must generate Z/m")
        if any(a % 2 == 0 for a in self.alpha_torus):
            raise InvalidSpec("torus components of alpha must be odd")

    @property
    def alpha(self) -> "GroupElement":
        return GroupElement(self.alpha_residue % self.m, self.alpha_torus)

    def zero(self) -> "GroupElement":
        return GroupElement(0, (0,) * self.d)

    def add(self, x: "GroupElement", y: "GroupElement") -> "GroupElement":
        return GroupElement((x.residue + y.residue) % self.m,
                            tuple((s + t) & MASK64 for s, t in zip(x.torus, y.torus)))

    def neg(self, x: "GroupElement") -> "GroupElement":
        return GroupElement(-x.residue % self.m, tuple(-t & MASK64 for t in x.torus))

    def double(self, x: "GroupElement") -> "GroupElement":
        return self.add(x, x)

    def times(self, x: "GroupElement", k: int) -> "GroupElement":
        return GroupElement(k * x.residue % self.m, tuple(k * t & MASK64 for t in x.torus))

    def haar(self, seed: int, count: int) -> "GroupBatch":
        rng = np.random.default_rng(seed)
        res = rng.integers(0, self.m, size=count, dtype=np.int64)
        tor = rng.integers(0, ONE, size=(count, self.d), dtype=np.uint64)
        return GroupBatch(res, tor)

    def translate(self, batch: "GroupBatch", t: "GroupElement") -> "GroupBatch":
        with np.errstate(over="ignore"):
            tor = batch.torus + np.asarray(t.torus, dtype=np.uint64)
        return GroupBatch((batch.residue + t.residue) % self.m, tor)

    def add_batch(self, x: "GroupBatch", y: "GroupBatch", k: int = 1) -> "GroupBatch":
        """``x + k*y`` elementwise."""
        with np.errstate(over="ignore"):
            tor = x.torus + y.torus * np.uint64(k & MASK64)
        return GroupBatch((x.residue + k * y.residue) % self.m, tor)

    def rotate(self, batch: "GroupBatch", steps: np.ndarray) -> "GroupBatch":
        """``z + steps * alpha`` with one step count per element."""
        steps = np.asarray(steps, dtype=np.int64)
        with np.errstate(over="ignore"):
            tor = batch.torus + steps.astype(np.uint64)[:, None] * np.asarray(self.alpha_torus, dtype=np.uint64)
        res = (batch.residue + (steps % self.m) * self.alpha_residue) % self.m
        return GroupBatch(res, tor)


class GroupElement(NamedTuple):
    residue: int
    torus: tuple


@dataclass
class GroupBatch:
    residue: np.ndarray
    torus: np.ndarray  # shape (count, d), uint64

    def __len__(self) -> int:
        return len(self.residue)


def doubling_index(G: KroneckerGroup) -> int:
    """Index of ``2G`` in ``G``; doubling is onto every torus factor."""
    return math.gcd(2, G.m)


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class Character:
    torus: tuple = (1,)
    residue: int = 0

    def phase(self, G: KroneckerGroup, batch: GroupBatch) -> tuple[np.ndarray, np.ndarray]:
        """Integer phases: torus part mod ``2^64`` and residue part mod ``m``."""
        if len(self.torus) != G.d:
            raise ValueError("character dimension does not match the group")
        tp = np.zeros(len(batch), dtype=np.uint64)
        with np.errstate(over="ignore"):
            for j, k in enumerate(self.torus):
                tp += batch.torus[:, j] * np.uint64(k & MASK64)
        return tp, (self.residue * batch.residue) % G.m

    def __call__(self, G: KroneckerGroup, batch: GroupBatch) -> np.ndarray:
        return _expi(*self.phase(G, batch), G.m)


def _expi(tp: np.ndarray, rp: np.ndarray, m: int) -> np.ndarray:
    turns = tp.astype(np.float64) * SCALE + rp.astype(np.float64) / m
    out = np.exp(2j * np.pi * turns)
    out[(tp == 0) & (rp == 0)] = 1.0
    return out


class CharacterTriple(NamedTuple):
    k: tuple
    r: tuple = (0, 0, 0)

    def characters(self) -> tuple[Character, Character, Character]:
        return tuple(Character((k,), r) for k, r in zip(self.k, self.r))


GroupFunction = Union[Character, Callable[[KroneckerGroup, GroupBatch], np.ndarray]]


def _one(G, batch):
    return np.ones(len(batch))


def _triple_product(G, fns, zs) -> np.ndarray:
    if all(isinstance(f, Character) for f in fns):
        tp = np.zeros(len(zs[0]), dtype=np.uint64)
        rp = np.zeros(len(zs[0]), dtype=np.int64)
        with np.errstate(over="ignore"):
            for f, z in zip(fns, zs):
                t, r = f.phase(G, z)
                tp += t
                rp += r
        return _expi(tp, rp % G.m, G.m)
    out = np.ones(len(zs[0]), dtype=complex)
    for f, z in zip(fns, zs):
        out = out * (_one if f is None else f)(G, z)
    return out


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MonteCarloResult:
    value: complex
    std_error: float
    n: int | None
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {"value": self.value.real, "value_imag": self.value.imag,
                "std_error": self.std_error, "n": self.n, "samples": self.samples, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _summarize(x: np.ndarray, n, seed) -> MonteCarloResult:
    s = x.size
    var = np.var(x.real) + np.var(x.imag)
    return MonteCarloResult(complex(x.mean()), float(np.sqrt(var / s)), n, s, seed)


def furstenberg_lhs(G: KroneckerGroup, u, v, w, n: int, sample_count: int, seed: int) -> MonteCarloResult:
    """Estimate ``(1/n) sum_{i<n} E[u(z) v(z + i alpha) w(z + 2i alpha)]``.

    Sample ``s`` uses ``i = s mod n`` and an independent Haar point ``z``, so
    every lag is weighted equally when ``n`` divides ``sample_count``.
    """
    if n < 1 or sample_count < 2:
        raise ValueError("need n >= 1 and at least two samples")
    z = G.haar(seed, sample_count)
    i = np.arange(sample_count, dtype=np.int64) % n
    x = _triple_product(G, (u, v, w), (z, G.rotate(z, i), G.rotate(z, 2 * i)))
    return _summarize(x, n, seed)


def furstenberg_rhs(G: KroneckerGroup, u, v, w, sample_count: int, seed: int) -> MonteCarloResult:
    """Estimate ``E[u(z) v(z + z') w(z + 2z')]`` over independent Haar ``z, z'``."""
    if sample_count < 2:
        raise ValueError("need at least two samples")
    z = G.haar(seed, sample_count)
    zp = G.haar(seed ^ 0x5DEECE66D, sample_count)
    x = _triple_product(G, (u, v, w), (z, G.add_batch(z, zp), G.add_batch(z, zp, 2)))
    return _summarize(x, None, seed)


# ---------------------------------------------------------------------------
# closed form on torus characters


def _e(turns_fixed: int) -> complex:
    return cmath.exp(2j * math.pi * ((turns_fixed & MASK64) * SCALE))


def _beta(triple: CharacterTriple, alpha: int) -> tuple[int, int]:
    if any(triple.r):
        raise ValueError("closed form covers torus-only characters")
    k1, k2, k3 = triple.k
    c = k2 + 2 * k3
    b = (c * alpha) & MASK64
    if c != 0 and b == 0:
        raise ResonantFrequency(f"({c}) * alpha wraps to 0")
    return c, b


def furstenberg_character(triple: CharacterTriple, alpha: int = GOLDEN_ALPHA, n: int = 10_000) -> tuple[complex, int]:
    """``(lhs, rhs)`` for ``u, v, w`` the torus characters ``k1, k2, k3``.

    The integral of the triple product at lag ``i`` is
    ``[k1+k2+k3 = 0] e(i (k2 + 2k3) alpha)``; the Cesàro mean over ``i < n`` is
    a geometric sum.
    """
    c, b = _beta(triple, alpha)
    if sum(triple.k) != 0:
        return 0j, 0
    if c == 0:
        return 1 + 0j, 1
    lhs = (1 - _e(n * b)) / (n * (1 - _e(b)))
    return lhs, 0


def geometric_bound(triple: CharacterTriple, alpha: int = GOLDEN_ALPHA, n: int = 10_000) -> float:
    """Upper bound ``2 / (n |1 - e(beta)|)`` on ``|lhs - rhs|`` (0 when exact)."""
    c, b = _beta(triple, alpha)
    if c == 0 or sum(triple.k) != 0:
        return 0.0
    return 2.0 / (n * abs(1 - _e(b)))


# ---------------------------------------------------------------------------
# one-sided containment estimator


def estimate_EN_a(system: System, f: Observable, N: int, a: float, horizon: int,
                  sample_count: int, seed: int) -> float:
    """Fraction of sampled ``x`` with ``f(T^-n x) > a  =>  f(T^n x) > a`` for all ``N < n <= horizon``."""
    if not 0 <= N < horizon:
        raise ValueError("need 0 <= N < horizon")
    f = as_observable(f)
    batch = system.sample_batch(seed, sample_count)
    n = np.arange(N + 1, horizon + 1)
    hits = 0
    for t in range(sample_count):
        vals = f.window(system, system.point(batch, t), -horizon, horizon + 1)
        back, fwd = vals[horizon - n], vals[horizon + n]
        hits += bool(np.all((back <= a) | (fwd > a)))
    return hits / sample_count
