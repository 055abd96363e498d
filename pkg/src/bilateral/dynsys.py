"""Invertible measure-preserving systems with exact orbit arithmetic.

Every system acts on a concrete point type and on *batches* of points
(numpy-backed), so that orbit windows and Monte-Carlo samples are evaluated
vectorized.  All arithmetic is exact: modular integers, wrapping 64-bit
fixed-point fractions, binary add-with-carry, or index shifts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import gcd
from typing import Any, NamedTuple

import numpy as np

from .errors import HorizonExceeded, InvalidSpec, WrongSystem
from .fixedpoint import GOLDEN_ALPHA, MASK64, bit_reverse64, derive_seed, hash_uniform

HORIZON_CAP = 1 << 62


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class CyclicRotation:
    N: int
    step: int = 1


@dataclass(frozen=True)
class CircleRotation:
    alpha: int = GOLDEN_ALPHA


@dataclass(frozen=True)
class ProductZmCircle:
    m: int = 3
    alpha_torus: int = GOLDEN_ALPHA
    alpha_residue: int = 1


@dataclass(frozen=True)
class Odometer:
    bit_depth: int = 80


@dataclass(frozen=True)
class BernoulliShift:
    seed: int = 0
    alphabet: tuple[float, ...] = (0.0, 1.0)
    probabilities: tuple[float, ...] = (0.5, 0.5)


SystemSpec = CyclicRotation | CircleRotation | ProductZmCircle | Odometer | BernoulliShift


# ---------------------------------------------------------------------------
# points and batches


class ProductPoint(NamedTuple):
    residue: int
    frac: int


class OdometerPoint(NamedTuple):
    """Dyadic odometer point; bit ``i`` of ``value`` is coordinate ``i``."""

    value: int

    @classmethod
    def from_bits(cls, bits) -> "OdometerPoint":
        return cls(sum(int(b) << i for i, b in enumerate(bits)))

    def bits(self, count: int) -> list[int]:
        return [(self.value >> i) & 1 for i in range(count)]


class BernoulliPoint(NamedTuple):
    key: int
    offset: int


@dataclass(frozen=True)
class ProductBatch:
    residue: np.ndarray
    frac: np.ndarray

    def __len__(self) -> int:
        return self.residue.size


@dataclass(frozen=True)
class OdometerBatch:
    low: np.ndarray
    high: np.ndarray

    def __len__(self) -> int:
        return self.low.size


@dataclass(frozen=True)
class BernoulliBatch:
    key: np.ndarray
    coord: np.ndarray

    def __len__(self) -> int:
        return self.coord.size


@dataclass(frozen=True)
class OrbitWindow:
    """Values ``f(T^i x)`` for ``i`` in ``[-n, n + q]``."""

    n: int
    q: int
    values: np.ndarray

    def __getitem__(self, i: int):
        if not -self.n <= i <= self.n + self.q:
            raise IndexError(i)
        return self.values[i + self.n]

    def __len__(self) -> int:
        return self.values.size

    def indices(self) -> np.ndarray:
        return np.arange(-self.n, self.n + self.q + 1)


def _check_k(k: int) -> int:
    k = int(k)
    if abs(k) > HORIZON_CAP:
        raise HorizonExceeded(f"|k| = {abs(k)} exceeds the horizon cap 2^62")
    return k


def _offsets_u64(lo: int, hi: int) -> np.ndarray:
    return np.arange(lo, hi, dtype=np.int64).astype(np.uint64)


# ---------------------------------------------------------------------------
# systems


class System:
    """Base class; subclasses are created by :func:`make_system`."""

    spec: Any

    def step(self, x, k: int):
        raise NotImplementedError

    def orbit(self, x, lo: int, hi: int):
        """Batch of ``T^i x`` for ``i`` in ``[lo, hi)``."""
        raise NotImplementedError

    def shift(self, batch, k: int):
        """Apply ``T^k`` to every point of a batch."""
        raise NotImplementedError

    def sample_batch(self, seed: int, count: int):
        raise NotImplementedError

    def point(self, batch, i: int):
        raise NotImplementedError

    def sample_point(self, seed: int):
        return self.point(self.sample_batch(seed, 1), 0)

    def real_image(self, batch) -> np.ndarray:
        raise WrongSystem(f"{type(self.spec).__name__} has no real image")

    def discrete_state(self, batch) -> np.ndarray:
        raise WrongSystem(f"{type(self.spec).__name__} has no discrete state")

    def __repr__(self) -> str:
        return f"System({self.spec!r})"


class CyclicSystem(System):
    def __init__(self, spec: CyclicRotation):
        self.spec = spec
        self.N = spec.N
        self.s = spec.step % spec.N

    @property
    def period(self) -> int:
        return self.N

    def step(self, x: int, k: int) -> int:
        k = _check_k(k)
        return (int(x) + k * self.s) % self.N

    def orbit(self, x: int, lo: int, hi: int) -> np.ndarray:
        i = np.arange(lo, hi, dtype=np.int64) % self.N
        return (int(x) + i * self.s) % self.N

    def shift(self, batch: np.ndarray, k: int) -> np.ndarray:
        return (batch + (_check_k(k) % self.N) * self.s) % self.N

    def sample_batch(self, seed: int, count: int) -> np.ndarray:
        return np.random.default_rng(seed).integers(0, self.N, size=count, dtype=np.int64)

    def point(self, batch, i: int) -> int:
        return int(batch[i])

    def discrete_state(self, batch) -> np.ndarray:
        return np.asarray(batch, dtype=np.int64)


class CircleSystem(System):
    def __init__(self, spec: CircleRotation):
        self.spec = spec
        self.alpha = spec.alpha

    def step(self, x: int, k: int) -> int:
        k = _check_k(k)
        return (int(x) + k * self.alpha) & MASK64

    def orbit(self, x: int, lo: int, hi: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            return _offsets_u64(lo, hi) * np.uint64(self.alpha) + np.uint64(x)

    def shift(self, batch: np.ndarray, k: int) -> np.ndarray:
        d = np.uint64((_check_k(k) * self.alpha) & MASK64)
        with np.errstate(over="ignore"):
            return batch + d

    def sample_batch(self, seed: int, count: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.integers(0, 1 << 64, size=count, dtype=np.uint64)

    def point(self, batch, i: int) -> int:
        return int(batch[i])

    def real_image(self, batch) -> np.ndarray:
        return np.asarray(batch, dtype=np.uint64).astype(np.float64) * 2.0 ** -64


class ProductSystem(System):
    def __init__(self, spec: ProductZmCircle):
        self.spec = spec
        self.m = spec.m
        self.a_res = spec.alpha_residue % spec.m
        self.a_tor = spec.alpha_torus

    def step(self, x: ProductPoint, k: int) -> ProductPoint:
        k = _check_k(k)
        r, t = x
        return ProductPoint((int(r) + k * self.a_res) % self.m, (int(t) + k * self.a_tor) & MASK64)

    def orbit(self, x: ProductPoint, lo: int, hi: int) -> ProductBatch:
        i = np.arange(lo, hi, dtype=np.int64)
        res = (int(x[0]) + (i % self.m) * self.a_res) % self.m
        with np.errstate(over="ignore"):
            frac = i.astype(np.uint64) * np.uint64(self.a_tor) + np.uint64(x[1])
        return ProductBatch(res, frac)

    def shift(self, batch: ProductBatch, k: int) -> ProductBatch:
        k = _check_k(k)
        with np.errstate(over="ignore"):
            frac = batch.frac + np.uint64((k * self.a_tor) & MASK64)
        return ProductBatch((batch.residue + k * self.a_res) % self.m, frac)

    def sample_batch(self, seed: int, count: int) -> ProductBatch:
        rng = np.random.default_rng(seed)
        res = rng.integers(0, self.m, size=count, dtype=np.int64)
        frac = rng.integers(0, 1 << 64, size=count, dtype=np.uint64)
        return ProductBatch(res, frac)

    def point(self, batch: ProductBatch, i: int) -> ProductPoint:
        return ProductPoint(int(batch.residue[i]), int(batch.frac[i]))

    def real_image(self, batch: ProductBatch) -> np.ndarray:
        return batch.frac.astype(np.float64) * 2.0 ** -64

    def discrete_state(self, batch: ProductBatch) -> np.ndarray:
        return batch.residue


class OdometerSystem(System):
    """Add-one-with-carry on bit sequences truncated at ``bit_depth`` bits.

    A point is the integer whose binary digits (least significant first) are
    the coordinates; beyond ``bit_depth`` the sequence is implicitly zero, so
    any carry into or borrow from that tail raises :class:`HorizonExceeded`.
    """

    def __init__(self, spec: Odometer):
        self.spec = spec
        self.bit_depth = spec.bit_depth
        self.limit = 1 << spec.bit_depth

    def _as_int(self, x) -> int:
        return int(x.value if isinstance(x, OdometerPoint) else x)

    def _check_range(self, lo: int, hi: int) -> None:
        if lo < 0 or hi > self.limit:
            raise HorizonExceeded(
                f"odometer carry leaves the {self.bit_depth}-bit window"
            )

    def step(self, x: OdometerPoint, k: int) -> OdometerPoint:
        k = _check_k(k)
        if abs(k) >= self.limit >> 1:
            raise HorizonExceeded(f"|k| must be below 2^{self.bit_depth - 1}")
        y = self._as_int(x) + k
        self._check_range(y, y + 1)
        return OdometerPoint(y)

    def orbit(self, x: OdometerPoint, lo: int, hi: int) -> OdometerBatch:
        base = self._as_int(x) + lo
        self._check_range(base, base + max(hi - lo, 0))
        low0 = np.uint64(base & MASK64)
        with np.errstate(over="ignore"):
            low = np.arange(max(hi - lo, 0), dtype=np.uint64) + low0
        carry = (low < low0).astype(np.uint64)
        high = np.uint64(base >> 64) + carry
        return OdometerBatch(low, high)

    def _check_batch(self, low: np.ndarray, high: np.ndarray) -> None:
        d = self.bit_depth
        if d >= 64:
            bad = np.any(high >= np.uint64(1 << (d - 64)))
        else:
            bad = np.any(high > 0) or np.any(low >= np.uint64(1 << d))
        if bad:
            raise HorizonExceeded("odometer carry into the implicit zero tail")

    def shift(self, batch: OdometerBatch, k: int) -> OdometerBatch:
        k = _check_k(k)
        d = np.uint64(abs(k) & MASK64)
        with np.errstate(over="ignore"):
            if k >= 0:
                low = batch.low + d
                high = batch.high + (low < batch.low).astype(np.uint64)
            else:
                low = batch.low - d
                borrow = low > batch.low
                if np.any(borrow & (batch.high == 0)):
                    raise HorizonExceeded("odometer borrow from the implicit zero tail")
                high = batch.high - borrow.astype(np.uint64)
        self._check_batch(low, high)
        return OdometerBatch(low, high)

    def sample_batch(self, seed: int, count: int) -> OdometerBatch:
        rng = np.random.default_rng(seed)
        low = rng.integers(0, 1 << 64, size=count, dtype=np.uint64)
        hb = self.bit_depth - 64
        if hb > 0:
            high = rng.integers(0, 1 << hb, size=count, dtype=np.uint64)
        else:
            low &= np.uint64(self.limit - 1)
            high = np.zeros(count, dtype=np.uint64)
        return OdometerBatch(low, high)

    def point(self, batch: OdometerBatch, i: int) -> OdometerPoint:
        return OdometerPoint((int(batch.high[i]) << 64) | int(batch.low[i]))

    def real_image(self, batch: OdometerBatch) -> np.ndarray:
        """Binary-expansion image: coordinate ``i`` is the digit of 2^-(i+1)."""
        return bit_reverse64(batch.low).astype(np.float64) * 2.0 ** -64


class BernoulliSystem(System):
    """Two-sided shift over i.i.d. coordinates.

    A point is ``(key, offset)``: coordinate ``c`` of the point is the symbol
    drawn by a keyed counter-based hash at counter ``offset + c``, so both time
    directions are addressable in O(1) without storing the sequence.
    """

    def __init__(self, spec: BernoulliShift):
        self.spec = spec
        self.alphabet = np.asarray(spec.alphabet, dtype=np.float64)
        cdf = np.cumsum(np.asarray(spec.probabilities, dtype=np.float64))
        cdf[-1] = 1.0
        self._cdf = cdf

    def step(self, x: BernoulliPoint, k: int) -> BernoulliPoint:
        k = _check_k(k)
        return BernoulliPoint(x.key, x.offset + k)

    def orbit(self, x: BernoulliPoint, lo: int, hi: int) -> BernoulliBatch:
        coord = np.arange(lo, hi, dtype=np.int64) + np.int64(x.offset)
        return BernoulliBatch(np.full(coord.size, x.key, dtype=np.uint64), coord)

    def shift(self, batch: BernoulliBatch, k: int) -> BernoulliBatch:
        return BernoulliBatch(batch.key, batch.coord + np.int64(_check_k(k)))

    def sample_batch(self, seed: int, count: int) -> BernoulliBatch:
        rng = np.random.default_rng(derive_seed(self.spec.seed, seed))
        keys = rng.integers(0, 1 << 64, size=count, dtype=np.uint64)
        return BernoulliBatch(keys, np.zeros(count, dtype=np.int64))

    def point(self, batch: BernoulliBatch, i: int) -> BernoulliPoint:
        return BernoulliPoint(int(batch.key[i]), int(batch.coord[i]))

    def symbols(self, key, counter) -> np.ndarray:
        u = hash_uniform(key, counter)
        return np.minimum(np.searchsorted(self._cdf, u, side="right"), self.alphabet.size - 1)

    def discrete_state(self, batch: BernoulliBatch) -> np.ndarray:
        return self.symbols(batch.key, batch.coord)

    def coordinate_value(self, x: BernoulliPoint, c: int) -> float:
        """Alphabet value at coordinate ``c`` of ``x``."""
        return float(self.alphabet[self.symbols(np.uint64(x.key), np.int64(x.offset + c))])


# ---------------------------------------------------------------------------
# construction and serialization


def make_system(spec: SystemSpec) -> System:
    """Validate ``spec`` and return a system handle."""
    if isinstance(spec, CyclicRotation):
        if spec.N < 1:
            raise InvalidSpec("CyclicRotation period must be positive")
        if gcd(spec.step, spec.N) != 1:
            raise InvalidSpec(f"step {spec.step} is not coprime to N={spec.N}")
        return CyclicSystem(spec)
    if isinstance(spec, CircleRotation):
        if not 0 <= spec.alpha <= MASK64 or spec.alpha % 2 == 0:
            raise InvalidSpec("alpha must be an odd unsigned 64-bit integer")
        return CircleSystem(spec)
    if isinstance(spec, ProductZmCircle):
        if spec.m < 1:
            raise InvalidSpec("modulus must be positive")
        if not 0 <= spec.alpha_torus <= MASK64 or spec.alpha_torus % 2 == 0:
            raise InvalidSpec("alpha_torus must be an odd unsigned 64-bit integer")
        if gcd(spec.alpha_residue, spec.m) != 1:
            raise InvalidSpec("alpha_residue must be coprime to m")
        return ProductSystem(spec)
    if isinstance(spec, Odometer):
        if not 2 <= spec.bit_depth <= 120:
            raise InvalidSpec("bit_depth must lie in [2, 120]")
        return OdometerSystem(spec)
    if isinstance(spec, BernoulliShift):
        if len(spec.alphabet) == 0:
            raise InvalidSpec("empty alphabet")
        if len(spec.alphabet) != len(spec.probabilities):
            raise InvalidSpec("alphabet and probabilities differ in length")
        if any(p < 0 for p in spec.probabilities):
            raise InvalidSpec("negative probability")
        if abs(sum(spec.probabilities) - 1.0) > 1e-12:
            raise InvalidSpec("probabilities must sum to 1 within 1e-12")
        return BernoulliSystem(spec)
    raise InvalidSpec(f"unknown system spec {spec!r}")


def step(system: System, x, k: int):
    return system.step(x, k)


def sample_point(system: System, seed: int):
    return system.sample_point(seed)


def orbit_window(system: System, x, n: int, q: int, f) -> OrbitWindow:
    """Evaluate ``f`` along ``T^i x`` for ``i`` in ``[-n, n + q]``."""
    if n < 0 or q < 0:
        raise ValueError("n and q must be nonnegative")
    return OrbitWindow(n, q, f.window(system, x, -n, n + q + 1))


def spec_to_json(spec: SystemSpec) -> dict:
    if isinstance(spec, CyclicRotation):
        return {"kind": "CyclicRotation", "N": spec.N, "step": spec.step}
    if isinstance(spec, CircleRotation):
        return {"kind": "CircleRotation", "alpha": str(spec.alpha)}
    if isinstance(spec, ProductZmCircle):
        return {"kind": "ProductZmCircle", "m": spec.m,
                "alpha_torus": str(spec.alpha_torus), "alpha_residue": spec.alpha_residue}
    if isinstance(spec, Odometer):
        return {"kind": "Odometer", "bit_depth": spec.bit_depth}
    if isinstance(spec, BernoulliShift):
        return {"kind": "BernoulliShift", "seed": str(spec.seed),
                "alphabet": list(spec.alphabet), "probabilities": list(spec.probabilities)}
    raise InvalidSpec(f"unknown system spec {spec!r}")


_SPEC_FIELDS = {
    "CyclicRotation": ({"N"}, {"step"}),
    "CircleRotation": (set(), {"alpha"}),
    "ProductZmCircle": (set(), {"m", "alpha_torus", "alpha_residue"}),
    "Odometer": (set(), {"bit_depth"}),
    "BernoulliShift": (set(), {"seed", "alphabet", "probabilities"}),
}


def _strict_keys(obj: dict, kind: str, table: dict) -> None:
    if kind not in table:
        raise InvalidSpec(f"unknown kind {kind!r}")
    required, optional = table[kind]
    keys = set(obj) - {"kind"}
    unknown = keys - required - optional
    if unknown:
        raise InvalidSpec(f"{kind}: unknown field(s) {sorted(unknown)}")
    missing = required - keys
    if missing:
        raise InvalidSpec(f"{kind}: missing field(s) {sorted(missing)}")


def spec_from_json(obj: dict | str) -> SystemSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    _strict_keys(obj, kind, _SPEC_FIELDS)
    if kind == "CyclicRotation":
        return CyclicRotation(int(obj["N"]), int(obj.get("step", 1)))
    if kind == "CircleRotation":
        return CircleRotation(int(obj.get("alpha", GOLDEN_ALPHA)))
    if kind == "ProductZmCircle":
        return ProductZmCircle(int(obj.get("m", 3)), int(obj.get("alpha_torus", GOLDEN_ALPHA)),
                               int(obj.get("alpha_residue", 1)))
    if kind == "Odometer":
        return Odometer(int(obj.get("bit_depth", 80)))
    d = BernoulliShift()
    return BernoulliShift(int(obj.get("seed", d.seed)),
                          tuple(float(a) for a in obj.get("alphabet", d.alphabet)),
                          tuple(float(p) for p in obj.get("probabilities", d.probabilities)))


def point_to_json(system: System, x) -> dict:
    if isinstance(system, CyclicSystem):
        return {"residue": int(x)}
    if isinstance(system, CircleSystem):
        return {"frac": str(int(x))}
    if isinstance(system, ProductSystem):
        return {"residue": int(x[0]), "frac": str(int(x[1]))}
    if isinstance(system, OdometerSystem):
        return {"value": str(int(x.value))}
    return {"key": str(int(x.key)), "offset": int(x.offset)}


def point_from_json(system: System, obj: dict):
    try:
        if isinstance(system, CyclicSystem):
            return int(obj["residue"]) % system.N
        if isinstance(system, CircleSystem):
            return int(obj["frac"]) & MASK64
        if isinstance(system, ProductSystem):
            return ProductPoint(int(obj["residue"]) % system.m, int(obj["frac"]) & MASK64)
        if isinstance(system, OdometerSystem):
            if "bits" in obj:
                return OdometerPoint.from_bits(int(c) for c in obj["bits"])
            return OdometerPoint(int(obj["value"]))
        return BernoulliPoint(int(obj["key"]), int(obj.get("offset", 0)))
    except KeyError as exc:
        raise InvalidSpec(f"point is missing field {exc}") from None
