"""Difference-set witnesses, their exhaustive verification, and passage times.

Two density lemmas are checked:

* mode 1: ``D`` in ``[a, 5a)`` with ``card D > 7a/2``; every ``i`` in
  ``[5a/2, 3a)`` is ``j - k`` with ``j, k`` in ``D`` and ``j - 2k >= a``;
* mode 4: ``D`` in ``[2a, 3a)`` with ``card D > 3a/4``; every ``i`` in
  ``[a/4, a/2)`` is ``j - k`` with ``j, k`` in ``D``.

For a fixed ``i`` the admissible pairs ``(k, k + i)`` form a graph on the
range, and ``i`` has no witness exactly when the complement of ``D`` is a
vertex cover of that graph.  :func:`lemma1_exhaustive` and
:func:`lemma4_exhaustive` count such complements exactly, over every set
above the density threshold, by multiplying per-component cover
polynomials; ``method="enumerate"`` walks the complements one by one and is
kept as an independent check for small ``a``.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Callable, NamedTuple

import numpy as np

from .dynsys import System
from .errors import BoundExceeded, DensityTooLow, OutOfRange, WitnessNotFound
from .observables import Observable
from .summation import is_integral, prefix_sums, two_sum

LEMMA1_MAX_A = 20
LEMMA4_MAX_A = 64
PASSAGE_MAX_R = 10 ** 7


# ---------------------------------------------------------------------------
# sets and witnesses


@dataclass(frozen=True)
class DeltaSet:
    a: int
    members: frozenset
    mode: int = 1

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("a must be positive")
        if self.mode not in (1, 4):
            raise ValueError("mode is 1 or 4")
        object.__setattr__(self, "members", frozenset(int(m) for m in self.members))
        lo, hi = self.range
        if any(not lo <= m < hi for m in self.members):
            raise OutOfRange(f"members must lie in [{lo}, {hi})")

    @property
    def range(self) -> tuple[int, int]:
        return (self.a, 5 * self.a) if self.mode == 1 else (2 * self.a, 3 * self.a)

    @property
    def density(self) -> Fraction:
        lo, hi = self.range
        return Fraction(len(self.members), hi - lo)

    @classmethod
    def full(cls, a: int, mode: int = 1) -> "DeltaSet":
        lo, hi = (a, 5 * a) if mode == 1 else (2 * a, 3 * a)
        return cls(a, frozenset(range(lo, hi)), mode)

    def without(self, removed) -> "DeltaSet":
        return DeltaSet(self.a, self.members - set(removed), self.mode)

    def __contains__(self, v) -> bool:
        return v in self.members

    def __len__(self) -> int:
        return len(self.members)


class WitnessPair(NamedTuple):
    j: int
    k: int


def target_range(a: int, mode: int) -> range:
    """Integers ``i`` the lemma must represent."""
    if mode == 1:
        return range(-(-5 * a // 2), 3 * a)
    return range(-(-a // 4), (a + 1) // 2)


def _pairs(a: int, mode: int, i: int) -> list[tuple[int, int]]:
    """Admissible ``(k, j)`` with ``j - k = i`` inside the range."""
    if mode == 1:
        # k >= a and j - 2k = i - k >= a
        return [(k, k + i) for k in range(a, i - a + 1)]
    return [(k, k + i) for k in range(2 * a, 3 * a - i)]


def is_valid_witness(delta: DeltaSet, i: int, w: WitnessPair) -> bool:
    """Independent re-check of a witness against the lemma's conditions."""
    j, k = w
    if j not in delta or k not in delta or j - k != i:
        return False
    return j - 2 * k >= delta.a if delta.mode == 1 else True


def _witness(delta: DeltaSet, i: int, mode: int) -> WitnessPair | None:
    if delta.mode != mode:
        raise ValueError(f"DeltaSet is in mode {delta.mode}, expected {mode}")
    if i not in target_range(delta.a, mode):
        r = target_range(delta.a, mode)
        raise OutOfRange(f"i={i} outside [{r.start}, {r.stop})")
    for k, j in _pairs(delta.a, mode, i):
        if k in delta.members and j in delta.members:
            return WitnessPair(j, k)
    return None


def lemma1_witness(delta: DeltaSet, i: int) -> WitnessPair | None:
    """Smallest-``k`` pair with ``i = j - k`` and ``j - 2k >= a``, or None."""
    return _witness(delta, i, 1)


def lemma4_witness(delta: DeltaSet, i: int) -> WitnessPair | None:
    """Smallest-``k`` pair with ``i = j - k``, or None."""
    return _witness(delta, i, 4)


# ---------------------------------------------------------------------------
# exhaustive verification


@dataclass
class ExhaustiveReport:
    a: int
    mode: int
    complement_max: int
    sets_checked: int
    violations: int
    per_i: dict = field(default_factory=dict)
    method: str = "count"
    elapsed_ms: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        out = {"a": self.a, "mode": self.mode, "complement_max": self.complement_max,
               "sets_checked": self.sets_checked, "violations": self.violations,
               "method": self.method, "per_i": {str(k): v for k, v in self.per_i.items()}}
        if timing:
            out["elapsed_ms"] = round(self.elapsed_ms, 3)
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True)


def _components(vertices: range, edges: list[tuple[int, int]]):
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, w in edges:
        parent[find(u)] = find(w)
    groups: dict[int, list[int]] = {}
    for v in vertices:
        groups.setdefault(find(v), []).append(v)
    touched = {v for e in edges for v in e}
    comps = [g for g in groups.values() if len(g) > 1 or g[0] in touched]
    free = sum(1 for g in groups.values() if len(g) == 1 and g[0] not in touched)
    return comps, free


def _poly_mul(p: list[int], q: list[int], cap: int) -> list[int]:
    out = [0] * min(len(p) + len(q) - 1, cap + 1)
    for i, x in enumerate(p):
        if not x:
            continue
        for j, y in enumerate(q):
            if i + j > cap:
                break
            out[i + j] += x * y
    return out


def _cover_polynomial(comp: list[int], edges: list[tuple[int, int]]):
    """Counts of vertex covers of one component by size, and one minimum cover."""
    if len(comp) > 24:
        raise BoundExceeded("component too large for direct cover enumeration")
    idx = {v: t for t, v in enumerate(comp)}
    local = [(idx[u], idx[w]) for u, w in edges if u in idx]
    poly = [0] * (len(comp) + 1)
    best = None
    for mask in range(1 << len(comp)):
        if all((mask >> u) & 1 or (mask >> w) & 1 for u, w in local):
            size = bin(mask).count("1")
            poly[size] += 1
            if best is None or size < len(best):
                best = [comp[t] for t in range(len(comp)) if (mask >> t) & 1]
    return poly, best


def cover_counts(a: int, mode: int, i: int, cap: int) -> tuple[list[int], list[int]]:
    """``counts[s]`` = number of complements of size ``s <= cap`` leaving ``i`` unrepresented.

    Also returns one minimum-size such complement.
    """
    lo, hi = (a, 5 * a) if mode == 1 else (2 * a, 3 * a)
    edges = _pairs(a, mode, i)
    comps, free = _components(range(lo, hi), edges)
    poly = [1]
    min_cover: list[int] = []
    for comp in comps:
        cp, best = _cover_polynomial(comp, [e for e in edges if e[0] in comp])
        poly = _poly_mul(poly, cp, cap)
        min_cover += best
    free_poly = [comb(free, t) for t in range(min(free, cap) + 1)]
    poly = _poly_mul(poly, free_poly, cap)
    return poly + [0] * (cap + 1 - len(poly)), sorted(min_cover)


def _check_intervals(a: int, i: int) -> None:
    # the two pair-end intervals [a, i-a] and [a+i, 2i-a]
    left, right = (a, i - a), (a + i, 2 * i - a)
    assert left[1] < right[0], "intervals overlap"
    assert left[0] >= a and right[1] < 5 * a, "intervals leave [a, 5a)"
    assert left[1] - left[0] == right[1] - right[0] == i - 2 * a


def _default_cap(a: int, mode: int) -> int:
    # card > 7a/2 (mode 1) or > 3a/4 (mode 4), as a bound on the complement
    return (a - 1) // 2 if mode == 1 else (a - 1) // 4


def _exhaustive(a: int, mode: int, method: str, complement_max: int | None) -> ExhaustiveReport:
    t0 = time.perf_counter()
    cap = _default_cap(a, mode) if complement_max is None else complement_max
    size = 4 * a if mode == 1 else a
    total = sum(comb(size, m) for m in range(cap + 1))
    targets = target_range(a, mode)
    if mode == 1:
        for i in targets:
            _check_intervals(a, i)
    if method == "count":
        per_i = {i: sum(cover_counts(a, mode, i, cap)[0]) for i in targets}
    elif method == "enumerate":
        per_i = _enumerate(a, mode, cap)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ExhaustiveReport(a, mode, cap, total, sum(per_i.values()), per_i, method,
                            (time.perf_counter() - t0) * 1e3)


def _enumerate(a: int, mode: int, cap: int) -> dict[int, int]:
    """Walk every complement of size <= cap and test each target with bit masks."""
    lo, hi = (a, 5 * a) if mode == 1 else (2 * a, 3 * a)
    full = (1 << (hi - lo)) - 1
    targets = list(target_range(a, mode))
    masks = {}
    for i in targets:
        m = 0
        for k, _ in _pairs(a, mode, i):
            m |= 1 << (k - lo)
        masks[i] = m
    per_i = dict.fromkeys(targets, 0)
    for size in range(cap + 1):
        for removed in combinations(range(hi - lo), size):
            d = full
            for r in removed:
                d &= ~(1 << r)
            for i in targets:
                if not (d & (d >> i) & masks[i]):
                    per_i[i] += 1
    return per_i


def lemma1_exhaustive(a: int, method: str = "count", complement_max: int | None = None) -> ExhaustiveReport:
    """Check every ``D`` in ``[a, 5a)`` with ``card D > 7a/2``.

    ``violations`` counts pairs ``(D, i)`` with no witness for ``i``.
    ``complement_max`` overrides the complement bound for probing below the
    density threshold.
    """
    if a < 1 or a > LEMMA1_MAX_A:
        raise BoundExceeded(f"a must lie in [1, {LEMMA1_MAX_A}]")
    return _exhaustive(a, 1, method, complement_max)


def lemma4_exhaustive(a: int, method: str = "count", complement_max: int | None = None) -> ExhaustiveReport:
    """Check every ``D`` in ``[2a, 3a)`` with ``card D > 3a/4``."""
    if a < 1 or a > LEMMA4_MAX_A:
        raise BoundExceeded(f"a must lie in [1, {LEMMA4_MAX_A}]")
    return _exhaustive(a, 4, method, complement_max)


def threshold_probe(a: int, mode: int) -> tuple[DeltaSet, int]:
    """A largest set with some unrepresentable target, and that target."""
    best = None
    for i in target_range(a, mode):
        counts, cover = cover_counts(a, mode, i, 4 * a)
        if best is None or len(cover) < len(best[1]):
            best = (i, cover)
    i, cover = best
    return DeltaSet.full(a, mode).without(cover), i


# ---------------------------------------------------------------------------
# passage times


class PointPredicate:
    """Wrap a per-point boolean function as a window predicate."""

    def __init__(self, fn: Callable[[object], bool]):
        self.fn = fn

    def mask(self, system: System, x, lo: int, hi: int) -> np.ndarray:
        return np.fromiter((bool(self.fn(system.step(x, t))) for t in range(lo, hi)),
                           dtype=bool, count=max(hi - lo, 0))


class BilateralNonpositive:
    """``{y : sum_{-n}^{n} f(T^i y) <= 0 for N <= n <= H}``.

    A finite-horizon stand-in for the intersection over all ``n >= N``.
    """

    def __init__(self, f: Observable, N: int, H: int):
        if not 0 <= N <= H:
            raise ValueError("need 0 <= N <= H")
        self.f, self.N, self.H = f, N, H

    def mask(self, system: System, x, lo: int, hi: int) -> np.ndarray:
        H = self.H
        vals = self.f.window(system, x, lo - H, hi + H)
        ph, pl = prefix_sums(vals)
        c = np.arange(hi - lo) + H
        out = np.ones(hi - lo, dtype=bool)
        for n in range(self.N, H + 1):
            out &= (ph[c + n + 1] - ph[c - n]) + (pl[c + n + 1] - pl[c - n]) <= 0
        return out


def _as_predicate(v_pred):
    return v_pred if hasattr(v_pred, "mask") else PointPredicate(v_pred)


def passage_times(system: System, x, v_pred, p: int, R: int) -> np.ndarray:
    """Sorted times ``t < R`` with ``T^(t+i) x`` in ``V`` for some ``0 <= i <= p``."""
    if R > PASSAGE_MAX_R:
        raise BoundExceeded(f"R must be at most {PASSAGE_MAX_R}")
    if p < 0 or R < 0:
        raise ValueError("p and R must be nonnegative")
    v = _as_predicate(v_pred).mask(system, x, 0, R + p)
    return np.flatnonzero(_sliding_any(v, p + 1)[:R])


def _sliding_any(v: np.ndarray, width: int) -> np.ndarray:
    """``out[t] = any(v[t : t + width])`` in one forward sweep."""
    out = np.zeros(max(v.size - width + 1, 0), dtype=bool)
    last = -1  # most recent hit seen from the right
    for t in range(v.size - 1, -1, -1):
        if v[t]:
            last = t
        if t < out.size:
            out[t] = last != -1 and last < t + width
    return out


def passage_times_bruteforce(system: System, x, v_pred, p: int, R: int) -> np.ndarray:
    pred = _as_predicate(v_pred)
    hits = [t for t in range(R) if pred.mask(system, x, t, t + p + 1).any()]
    return np.asarray(hits, dtype=np.int64)


# ---------------------------------------------------------------------------
# replay of the passage-time argument


@dataclass
class Lemma2Report:
    a: int
    N: int
    p: int
    density: Fraction
    n_checked: int = 0
    min_slack_star: float = float("inf")
    min_slack_star2: float = float("inf")
    min_slack_final: float = float("inf")
    min_slack_final_odd: float = float("inf")
    max_pairing_error: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"a": self.a, "N": self.N, "p": self.p, "density": str(self.density),
                "n_checked": self.n_checked, "min_slack_star": self.min_slack_star,
                "min_slack_star2": self.min_slack_star2, "min_slack_final": self.min_slack_final,
                "min_slack_final_odd": self.min_slack_final_odd,
                "max_pairing_error": self.max_pairing_error,
                "all_hold": self.all_hold, "failures": self.failures[:20]}


class _Sums:
    """Inclusive orbit sums over ``[lo, hi]`` from one prefix pass."""

    def __init__(self, system, x, f, start, stop):
        self.start = start
        self.vals = f.window(system, x, start, stop)
        self.exact = is_integral(self.vals)
        self.ph, self.pl = prefix_sums(self.vals, self.exact)
        self.aph, self.apl = prefix_sums(np.abs(self.vals), self.exact)

    def _get(self, ph, pl, lo, hi):
        a, b = hi - self.start + 1, lo - self.start
        if self.exact:
            return int(ph[a] - ph[b])
        s, e = two_sum(ph[a], -ph[b])
        return float(s + (e + (pl[a] - pl[b])))

    def sum(self, lo, hi):
        return self._get(self.ph, self.pl, lo, hi)

    def abs_sum(self, lo, hi):
        return self._get(self.aph, self.apl, lo, hi)

    def value(self, i):
        v = self.vals[i - self.start]
        return int(v) if self.exact else float(v)


def lemma2_horizon(a: int, p: int) -> int:
    """Largest window radius the replay evaluates; a finite stand-in for V needs no more."""
    return 5 * a + 3 * p


def lemma2_trace(system: System, x, f: Observable, N: int, p: int, v_pred, a: int) -> Lemma2Report:
    """Replay the two-window argument at scale ``a`` along the orbit of ``x``.

    For each ``n`` in ``[5a/2, 3a)`` a witness ``n = j - k`` with ``j, k`` in
    the passage-time set is found, the returns ``r, s`` into ``V`` are
    recovered, and the inequalities for the windows centred at ``k + r`` and
    ``j + s`` as well as the resulting bounds on forward sums of lengths
    ``2n`` and ``2n + 1`` are checked.
    """
    if a <= N + 4 * p:
        raise ValueError(f"need a > N + 4p = {N + 4 * p}")
    pred = _as_predicate(v_pred)
    # membership is only ever queried at times in [a, 5a + p)
    in_v = np.zeros(5 * a + p, dtype=bool)
    in_v[a:] = pred.mask(system, x, a, 5 * a + p)
    w = _sliding_any(in_v, p + 1)[:5 * a]
    members = np.flatnonzero(w[a:5 * a]) + a
    delta = DeltaSet(a, frozenset(members.tolist()), 1)
    if not delta.density > Fraction(7, 8):
        raise DensityTooLow(f"passage-time density {delta.density} <= 7/8 at a={a}")

    sums = _Sums(system, x, f, -2 * p - 1, 10 * a + 4 * p + 4)
    bound = sums.abs_sum(-2 * p, 2 * p)
    bound_odd = abs(sums.value(0)) + sums.abs_sum(-2 * p + 1, 2 * p + 1)
    rep = Lemma2Report(a, N, p, delta.density)

    def first_return(t):
        hits = np.flatnonzero(in_v[t:t + p + 1])
        if hits.size == 0:
            raise WitnessNotFound(f"time {t} is not a passage time")
        return int(hits[0])

    for n in target_range(a, 1):
        wp = lemma1_witness(delta, n)
        if wp is None:
            raise WitnessNotFound(f"no witness for n={n} at a={a}")
        j, k = wp
        r, s = first_return(k), first_return(j)
        zeta = 2 * (s - r)
        xi = j - 2 * k + s - 2 * r - zeta - 1
        assert xi >= N and k + r + zeta >= N
        star = sums.sum(-zeta, 2 * k + 2 * r + zeta)
        star2 = sums.sum(-xi + j + s, xi + j + s)
        joined = sums.sum(-zeta, 2 * (j - k) - 1)
        rep.max_pairing_error = max(rep.max_pairing_error, abs(star + star2 - joined))
        final = sums.sum(0, 2 * n - 1)
        final_odd = sums.sum(0, 2 * n)
        rep.min_slack_star = min(rep.min_slack_star, -star)
        rep.min_slack_star2 = min(rep.min_slack_star2, -star2)
        rep.min_slack_final = min(rep.min_slack_final, bound - final)
        rep.min_slack_final_odd = min(rep.min_slack_final_odd, bound_odd - final_odd)
        for name, ok in (("star", star <= 0), ("star2", star2 <= 0),
                         ("final", final <= bound), ("final_odd", final_odd <= bound_odd)):
            if not ok:
                rep.failures.append({"n": n, "j": j, "k": k, "r": r, "s": s, "which": name})
        rep.n_checked += 1
    return rep


def pilot_lemma2(system: System, f: Observable, a: int, seed: int = 0, N_grid=(1, 2, 4, 8, 16, 32),
                 p_max: int = 64, coverage: float = 0.95, length: int = 2048) -> tuple[int, int]:
    """Choose ``(N, p)`` for :func:`lemma2_trace` from one pilot orbit.

    Returns the first ``N`` in ``N_grid`` and the smallest ``p`` whose passage
    set covers at least ``coverage`` of ``length`` pilot times, subject to
    ``a > N + 4p``.
    """
    x = system.sample_point(seed)
    for N in N_grid:
        V = BilateralNonpositive(f, N, lemma2_horizon(a, p_max))
        in_v = V.mask(system, x, 0, length + p_max)
        for p in range(p_max + 1):
            if a <= N + 4 * p:
                break
            if _sliding_any(in_v, p + 1)[:length].mean() >= coverage:
                return N, p
    raise DensityTooLow("no (N, p) on the grid reaches the coverage target")
