"""Filling scheme: suprema of forward partial sums and bounded coboundaries.

On a cyclic rotation every quantity is computed exactly over one period
(integers, or ``Fraction`` for non-integer tables).  On other systems only
the truncated sup ``F_N``, a monotone lower bound for ``F``, is available.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate

import numpy as np

from . import averages
from .dynsys import CyclicSystem, OrbitWindow, System, orbit_window
from .errors import InfiniteF, NotACoboundary, WrongSystem
from .observables import Observable, as_observable
from .summation import is_integral, prefix_sums


@dataclass(frozen=True)
class FillingResult:
    F: object
    f_plus: object
    f_minus: object
    finite: bool
    n_star: int | None

    def to_dict(self) -> dict:
        def num(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return v if isinstance(v, int) else float(v)

        return {"F": num(self.F), "F_plus": num(self.f_plus), "F_minus": num(self.f_minus),
                "n_star": self.n_star}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _periodic(system: System) -> CyclicSystem:
    if not isinstance(system, CyclicSystem):
        raise WrongSystem("exact filling scheme needs a periodic (cyclic) system")
    return system


def _exact_values(f, system: CyclicSystem) -> list:
    """Per-state values of ``f`` as ints or Fractions, indexed by state."""
    f = as_observable(f)
    vals = f.evaluate(system, np.arange(system.N, dtype=np.int64))
    if is_integral(vals):
        return [int(v) for v in vals]
    return [Fraction(float(v)) for v in vals]


def _orbit_states(system: CyclicSystem, x: int) -> list[int]:
    return [int(s) for s in system.orbit(x, 0, system.N)]


def _filling_at(table: list, states: list[int]) -> FillingResult:
    sums = list(accumulate(table[s] for s in states))
    if sums[-1] > 0:
        return FillingResult(math.inf, math.inf, 0, False, None)
    best = max(sums)
    n_star = sums.index(best) + 1
    return FillingResult(best, max(best, 0), max(-best, 0), True, n_star)


def filling_sup_exact(system: System, f, x: int) -> FillingResult:
    """``F(x) = sup_{n>0} S_n(x)``, exact on a periodic system.

    Since ``S_{n+N} = S_n + S_N``, ``F`` is infinite iff the period sum is
    positive and otherwise equals the max over the first period.
    """
    system = _periodic(system)
    return _filling_at(_exact_values(f, system), _orbit_states(system, x))


def filling_table(system: System, f) -> list[FillingResult]:
    system = _periodic(system)
    table = _exact_values(f, system)
    return [_filling_at(table, _orbit_states(system, x)) for x in range(system.N)]


def verify_filling_equation(system: System, f):
    """Max over states of ``|f - (-F^- + F^+ - F^+ o T)|`` (exact)."""
    system = _periodic(system)
    table = _exact_values(f, system)
    res = filling_table(system, f)
    if not all(r.finite for r in res):
        raise InfiniteF("period sum is positive; F = +inf")
    worst = 0
    for x in range(system.N):
        rhs = -res[x].f_minus + res[x].f_plus - res[system.step(x, 1)].f_plus
        worst = max(worst, abs(table[x] - rhs))
    return worst


def mean_forward_limit(system: System, f) -> Fraction:
    """``lim A_n^+ f`` on a periodic system: the period mean (exact)."""
    system = _periodic(system)
    return Fraction(sum(_exact_values(f, system))) / system.N


def truncated_filling_sup(system: System, x, f: Observable, N: int):
    """``F_N = max_{1<=n<=N} S_n(x)``: nondecreasing in ``N`` and at most ``F``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    vals = as_observable(f).window(system, x, 0, N)
    hi, lo = prefix_sums(vals)
    sums = (hi + lo)[1:]
    best = sums.max()
    return int(best) if sums.dtype.kind == "i" else float(best)


def extract_coboundary(system: System, f) -> list:
    """Solve ``f = g - g o T`` with ``g(0) = 0``; per-state values of ``g``.

    ``g(T^j 0) = -S_j(0)``.  Raises :class:`NotACoboundary` when the period sum
    is nonzero.
    """
    system = _periodic(system)
    table = _exact_values(f, system)
    states = _orbit_states(system, 0)
    sums = [0] + list(accumulate(table[s] for s in states))
    if sums[-1] != 0:
        raise NotACoboundary(f"period sum {sums[-1]} != 0")
    g = [0] * system.N
    for j, s in enumerate(states):
        g[s] = -sums[j]
    return g


def bilateral_sup(window: OrbitWindow, N: int | None = None):
    """``max_{0<=n<=N} |sum_{i=-n}^{n} f(T^i x)|`` from a window of radius >= N."""
    if N is None:
        N = window.n
    if N > window.n:
        raise ValueError("window radius is smaller than N")
    vals = window.values
    c = window.n
    exact = is_integral(vals)
    fh, fl = prefix_sums(vals[c:c + N + 1], exact)
    bh, bl = prefix_sums(vals[c - 1::-1][:N] if c else vals[:0], exact)
    m = np.arange(N + 1)
    w = averages._bilateral_sums((fh[m + 1], fl[m + 1]), (bh[m], bl[m]))
    top = np.max(np.abs(w))
    return int(top) if exact else float(top)


def bilateral_sup_at(system: System, x, f: Observable, N: int):
    return bilateral_sup(orbit_window(system, x, N, 0, f), N)
