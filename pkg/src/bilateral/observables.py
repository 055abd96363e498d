"""Observables: the measurable functions evaluated along orbits.

Each observable evaluates vectorized on a batch of points (``evaluate``) and
along a stretch of one orbit (``window``).  The pathological constructions
live here too: the tower-roof function on the odometer, the heavy-tailed
``u`` and the combination ``u + v - v o T``, plus the three-valued function on
Z/3Z x R/Z whose symmetric sums vanish on one fiber.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynsys import (
    OdometerBatch,
    OdometerSystem,
    ProductSystem,
    System,
)
from .errors import CapExceeded, ClampWarning, InvalidSpec, WrongSystem

CLAMP_FLOOR = 2.0 ** -64
CLAMP_CEIL = np.nextafter(1.0, 0.0)
MAX_TOWER_CAP = 32


class Observable:
    """Base class.  Subclasses implement :meth:`evaluate`."""

    kind = "Observable"

    def evaluate(self, system: System, batch) -> np.ndarray:
        raise NotImplementedError

    def window(self, system: System, x, lo: int, hi: int) -> np.ndarray:
        """Values along the orbit of ``x`` at times ``lo, ..., hi - 1``."""
        return self.evaluate(system, system.orbit(x, lo, hi))

    def to_json(self) -> dict:
        raise NotImplementedError


def eval(f: Observable, system: System, x) -> float:  # noqa: A001 - mirrors the public op name
    """Value of ``f`` at the single point ``x``."""
    return float(f.window(system, x, 0, 1)[0])


@dataclass(frozen=True)
class Constant(Observable):
    value: float
    kind = "Constant"

    def evaluate(self, system, batch):
        return np.full(len(batch), self.value, dtype=np.float64)

    def to_json(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class TableLookup(Observable):
    """Value indexed by the discrete state of a point.

    The discrete state is the residue on cyclic and product systems and the
    coordinate-0 symbol on a Bernoulli shift.
    """

    values: tuple[float, ...]
    kind = "TableLookup"

    def evaluate(self, system, batch):
        idx = system.discrete_state(batch)
        table = np.asarray(self.values, dtype=np.float64)
        if idx.size and int(idx.max()) >= table.size:
            raise WrongSystem(f"table of size {table.size} is too short for this system")
        return table[idx]

    def to_json(self):
        return {"kind": self.kind, "values": list(self.values)}


_SMOOTH = {
    "cos": lambda y: np.cos(2.0 * np.pi * y),
    "sin": lambda y: np.sin(2.0 * np.pi * y),
    "identity": lambda y: y,
}


@dataclass(frozen=True)
class SmoothCircle(Observable):
    """Named closed form of the real image ``y`` in [0, 1): ``cos`` is cos(2 pi y)."""

    name: str = "cos"
    kind = "SmoothCircle"

    def __post_init__(self):
        if self.name not in _SMOOTH:
            raise InvalidSpec(f"unknown closed form {self.name!r}; choose from {sorted(_SMOOTH)}")

    def evaluate(self, system, batch):
        return _SMOOTH[self.name](system.real_image(batch))

    def to_json(self):
        return {"kind": self.kind, "name": self.name}


@dataclass(frozen=True)
class HeavyTail(Observable):
    """``y ** -beta`` of the real image, with ``y`` clamped to [2^-64, 1)."""

    beta: float = 1.5
    kind = "HeavyTail"

    def evaluate(self, system, batch):
        y = system.real_image(batch)
        clamped = (y < CLAMP_FLOOR) | (y > CLAMP_CEIL)
        if np.any(clamped):
            warnings.warn(f"{int(clamped.sum())} point(s) clamped", ClampWarning, stacklevel=2)
            y = np.clip(y, CLAMP_FLOOR, CLAMP_CEIL)
        return y ** -self.beta

    def to_json(self):
        return {"kind": self.kind, "beta": self.beta}


def _l_function(l_spec) -> tuple[Callable[[int], int], object]:
    if l_spec == "identity":
        return (lambda n: n), "identity"
    if l_spec == "square":
        return (lambda n: n * n), "square"
    if callable(l_spec):
        return l_spec, None
    seq = [int(v) for v in l_spec]
    if not seq or seq[0] < 1 or any(b < a for a, b in zip(seq, seq[1:])):
        raise InvalidSpec("l_sequence must be nondecreasing with l(1) >= 1")

    def lookup(n: int) -> int:
        if n > len(seq):
            raise CapExceeded(f"explicit l_sequence has no entry for n={n}")
        return seq[n - 1]

    return lookup, seq


@dataclass(frozen=True, eq=False)
class RokhlinV(Observable):
    """Sum of tower-roof bumps on the dyadic odometer.

    Tower ``k`` has base {first 2k bits zero} and height 4^k, so its roof is
    {first 2k bits one}; the bump there is ``2^k * l(4^k)``.  A point on the
    roof of tower ``k`` is on every lower roof, hence ``v`` is the cumulative
    bump up to ``k* = min(K, trailing ones // 2)``.
    """

    l_spec: object = "identity"
    K: int = 16
    kind = "RokhlinV"
    table: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.K <= MAX_TOWER_CAP:
            raise CapExceeded(f"tower cap K={self.K} must lie in [1, {MAX_TOWER_CAP}]")
        l, _ = _l_function(self.l_spec)
        cum = [0]
        for k in range(1, self.K + 1):
            lv = int(l(4 ** k))
            if lv < 1:
                raise InvalidSpec("l(n) must be >= 1")
            cum.append(cum[-1] + (2 ** k) * lv)
        object.__setattr__(self, "table", tuple(cum))

    def bump(self, k: int) -> int:
        return self.table[k] - self.table[k - 1]

    def _check(self, system):
        if not isinstance(system, OdometerSystem):
            raise WrongSystem("RokhlinV lives on the odometer")
        if system.bit_depth < 2 * self.K + 8:
            raise CapExceeded(f"bit_depth {system.bit_depth} < 2K + 8 = {2 * self.K + 8}")

    def level(self, system, batch: OdometerBatch) -> np.ndarray:
        """Highest tower index whose roof contains each point (0 if none)."""
        self._check(system)
        inv = ~batch.low
        with np.errstate(over="ignore"):
            low_zero = inv & (~inv + np.uint64(1))
        ones = np.where(inv == 0, 64, np.log2(np.maximum(low_zero, 1).astype(np.float64)).astype(np.int64))
        return np.minimum(ones // 2, self.K)

    def evaluate(self, system, batch):
        return np.asarray(self.table, dtype=np.float64)[self.level(system, batch)]

    def exact(self, system, x) -> int:
        """Integer value of ``v`` at one point."""
        self._check(system)
        val = int(x.value if hasattr(x, "value") else x)
        ones = 0
        while ones < 64 and (val >> ones) & 1:
            ones += 1
        return self.table[min(ones // 2, self.K)]

    def to_json(self):
        _, ser = _l_function(self.l_spec)
        if ser is None:
            raise InvalidSpec("callable l_sequence cannot be serialized")
        return {"kind": self.kind, "l_sequence": ser, "K": self.K}


def make_rokhlin_v(l_spec="identity", K: int = 16) -> RokhlinV:
    return RokhlinV(l_spec, K)


@dataclass(frozen=True, eq=False)
class Coboundary(Observable):
    """``g - g o T``."""

    g: Observable
    kind = "Coboundary"

    def evaluate(self, system, batch):
        return self.g.evaluate(system, batch) - self.g.evaluate(system, system.shift(batch, 1))

    def window(self, system, x, lo, hi):
        gw = self.g.window(system, x, lo, hi + 1)
        return gw[:-1] - gw[1:]

    def to_json(self):
        return {"kind": self.kind, "g": self.g.to_json()}


def make_coboundary(g: Observable) -> Coboundary:
    return Coboundary(g)


@dataclass(frozen=True, eq=False)
class ScaledSum(Observable):
    terms: tuple[tuple[float, Observable], ...]
    kind = "ScaledSum"

    def evaluate(self, system, batch):
        out = np.zeros(len(batch), dtype=np.float64)
        for c, f in self.terms:
            out = out + c * f.evaluate(system, batch)
        return out

    def window(self, system, x, lo, hi):
        out = np.zeros(max(hi - lo, 0), dtype=np.float64)
        for c, f in self.terms:
            out = out + c * f.window(system, x, lo, hi)
        return out

    def to_json(self):
        return {"kind": self.kind, "terms": [[c, f.to_json()] for c, f in self.terms]}


@dataclass(frozen=True, eq=False)
class Prop1F(Observable):
    """``u + v - v o T`` on the odometer, with ``u`` heavy-tailed and ``v`` tower bumps.

    ``u = y^(-3/2)`` is not integrable while ``sqrt(u)`` is; ``v`` uses
    ``l(n) = n^2`` so that ``v o T^n / n^2`` is unbounded along orbits.
    """

    K: int = 16
    beta: float = 1.5
    kind = "Prop1F"
    u: HeavyTail = field(init=False, repr=False)
    v: RokhlinV = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "u", HeavyTail(self.beta))
        object.__setattr__(self, "v", RokhlinV("square", self.K))

    def _check(self, system):
        if not isinstance(system, OdometerSystem):
            raise WrongSystem("Prop1F lives on the odometer")

    def evaluate(self, system, batch):
        self._check(system)
        return self.u.evaluate(system, batch) + (
            self.v.evaluate(system, batch) - self.v.evaluate(system, system.shift(batch, 1)))

    def window(self, system, x, lo, hi):
        self._check(system)
        vw = self.v.window(system, x, lo, hi + 1)
        return self.u.window(system, x, lo, hi) + (vw[:-1] - vw[1:])

    def to_json(self):
        return {"kind": self.kind, "K": self.K, "beta": self.beta}


def make_prop1_f(K: int = 16) -> Prop1F:
    if not 1 <= K <= MAX_TOWER_CAP:
        raise CapExceeded(f"tower cap K={K} must lie in [1, {MAX_TOWER_CAP}]")
    return Prop1F(K)


REMARKS_VALUES = (1.0, 0.0, -1.0)


@dataclass(frozen=True)
class RemarksF(Observable):
    """1, 0, -1 on residues 0, 1, 2 of Z/3Z x R/Z."""

    kind = "RemarksF"

    def evaluate(self, system, batch):
        if not isinstance(system, ProductSystem) or system.m != 3:
            raise WrongSystem("RemarksF needs the product system with m = 3")
        return np.asarray(REMARKS_VALUES)[batch.residue]

    def to_json(self):
        return {"kind": self.kind}


def make_remarks_f() -> RemarksF:
    return RemarksF()


def as_observable(f) -> Observable:
    """Accept an observable or a per-state value sequence."""
    if isinstance(f, Observable):
        return f
    return TableLookup(tuple(float(v) for v in f))


def observable_from_json(obj: dict | str) -> Observable:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    allowed = {
        "Constant": {"value"}, "TableLookup": {"values"}, "SmoothCircle": {"name"},
        "HeavyTail": {"beta"}, "RokhlinV": {"l_sequence", "K"}, "Prop1F": {"K", "beta"},
        "RemarksF": set(), "Coboundary": {"g"}, "ScaledSum": {"terms"},
    }
    if kind not in allowed:
        raise InvalidSpec(f"unknown observable kind {kind!r}")
    unknown = set(obj) - {"kind"} - allowed[kind]
    if unknown:
        raise InvalidSpec(f"{kind}: unknown field(s) {sorted(unknown)}")
    if kind == "Constant":
        return Constant(float(obj["value"]))
    if kind == "TableLookup":
        return TableLookup(tuple(float(v) for v in obj["values"]))
    if kind == "SmoothCircle":
        return SmoothCircle(obj.get("name", "cos"))
    if kind == "HeavyTail":
        return HeavyTail(float(obj.get("beta", 1.5)))
    if kind == "RokhlinV":
        return RokhlinV(obj.get("l_sequence", "identity"), int(obj.get("K", 16)))
    if kind == "Prop1F":
        return Prop1F(int(obj.get("K", 16)), float(obj.get("beta", 1.5)))
    if kind == "RemarksF":
        return RemarksF()
    if kind == "Coboundary":
        return Coboundary(observable_from_json(obj["g"]))
    return ScaledSum(tuple((float(c), observable_from_json(f)) for c, f in obj["terms"]))


def observable_to_json(f: Observable) -> dict:
    return f.to_json()


def table_of(f: Observable, system, states: Sequence[int] | None = None) -> np.ndarray:
    """Values of ``f`` at every state of a finite system, in state order."""
    n = system.N
    batch = np.arange(n, dtype=np.int64) if states is None else np.asarray(states, dtype=np.int64)
    return f.evaluate(system, batch)
