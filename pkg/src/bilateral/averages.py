"""Forward, backward, bilateral and asymmetric Cesaro averages along one orbit.

All per-``n`` sequences come out of one pass of prefix sums over an orbit
window.  Integer-valued windows are summed exactly; float windows use
double-double prefix sums, so window sums are accurate to a few ulps of the
largest partial sum.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .dynsys import OrbitWindow, System, orbit_window
from .errors import MismatchedTraces
from .observables import Observable
from .summation import dd_add, is_integral, prefix_sums

CSV_HEADER = ("n", "a_plus", "a_minus", "b", "b_q", "r", "d")
CAVEAT = "finite-horizon diagnostic"
HIT_TOL = 1e-12


def _bilateral_sums(fwd, bwd):
    """Window sums ``sum_{-n}^{n+shift}`` from forward and strictly-backward prefixes.

    ``fwd`` is the pair (hi, lo) of forward prefix sums at the right ends,
    ``bwd`` the pair of sums of ``f(T^{-1} x), ..., f(T^{-n} x)``.
    """
    h, l = dd_add(fwd[0], fwd[1], bwd[0], bwd[1])
    return h + l


@dataclass
class AveragesTrace:
    """Per-``n`` averages for ``n = 1..N`` along the orbit of one point.

    ``forward_sums[m]`` is the sum of ``f(T^i x)`` for ``0 <= i < m``
    (``m = 0..N+q+1``); ``backward_sums[m]`` the sum for ``-m < i <= 0``
    (``m = 0..N``); ``window_sums[n]`` and ``window_sums_q[n]`` the sums over
    ``[-n, n]`` and ``[-n, n+q]`` (``n = 0..N``).  When ``exact`` is true these
    arrays hold exact integers.
    """

    N: int
    q: int
    window: OrbitWindow
    a_plus: np.ndarray
    a_minus: np.ndarray
    b: np.ndarray
    b_q: np.ndarray
    r: np.ndarray
    d: np.ndarray
    forward_sums: np.ndarray
    backward_sums: np.ndarray
    window_sums: np.ndarray
    window_sums_q: np.ndarray
    exact: bool

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def value(self, i: int):
        """``f(T^i x)`` from the stored window."""
        return self.window[i]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        cols = (self.a_plus, self.a_minus, self.b, self.b_q, self.r, self.d)
        for k in range(self.N):
            w.writerow([k + 1] + [format(float(c[k]), ".17g") for c in cols])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def trace_from_window(window: OrbitWindow) -> AveragesTrace:
    N, q = window.n, window.q
    if N < 1:
        raise ValueError("horizon N must be >= 1")
    vals = window.values
    exact = is_integral(vals)
    if exact:
        vals = vals.astype(np.int64)
    fwd = vals[N:]                      # i = 0 .. N+q
    bwd1 = vals[N - 1::-1]              # i = -1 .. -N
    pf = prefix_sums(fwd, exact)        # m = 0 .. N+q+1
    pb1 = prefix_sums(bwd1, exact)      # m = 0 .. N
    n = np.arange(1, N + 1)
    m0 = np.arange(0, N + 1)

    w = _bilateral_sums((pf[0][m0 + 1], pf[1][m0 + 1]), (pb1[0][m0], pb1[1][m0]))
    wq = _bilateral_sums((pf[0][m0 + q + 1], pf[1][m0 + q + 1]), (pb1[0][m0], pb1[1][m0]))
    f0 = vals[N]
    pb_h, pb_l = dd_add(pb1[0][:-1], pb1[1][:-1], np.full(N, f0, dtype=pb1[0].dtype),
                        np.zeros(N, dtype=pb1[1].dtype))
    backward = np.concatenate((np.zeros(1, dtype=pb_h.dtype), pb_h + pb_l))
    forward = pf[0] + pf[1]

    minus = vals[N - n]
    plus_n = vals[N + n]
    plus_nq = vals[N + n + q]
    return AveragesTrace(
        N=N, q=q, window=window,
        a_plus=forward[n] / n,
        a_minus=backward[n] / n,
        b=w[1:] / (2 * n + 1),
        b_q=wq[1:] / (2 * n + 1 + q),
        r=(minus + plus_n) / n,
        d=(minus - plus_nq) / n,
        forward_sums=forward,
        backward_sums=backward,
        window_sums=w,
        window_sums_q=wq,
        exact=exact,
    )


def averages_trace(system: System, x, f: Observable, N: int, q: int = 0) -> AveragesTrace:
    if N < 1 or q < 0:
        raise ValueError("need N >= 1 and q >= 0")
    return trace_from_window(orbit_window(system, x, N, q, f))


def _overlap_check(t1: AveragesTrace, t2: AveragesTrace, shift: int) -> None:
    # t2 must be the trace at T^shift x: its value at i equals t1's at i + shift
    lo = max(-t1.N, -t2.N + shift)
    hi = min(t1.N + t1.q, t2.N + t2.q + shift)
    a = t1.window.values[lo + t1.N: hi + t1.N + 1]
    b = t2.window.values[lo - shift + t2.N: hi - shift + t2.N + 1]
    if not np.array_equal(a, b):
        raise MismatchedTraces("second trace is not along the expected shifted orbit")


def residual_identity_check(trace: AveragesTrace, shifted: AveragesTrace):
    """Max over ``n`` of ``|(W_n(x) - W_n(Tx)) - (f(T^-n x) - f(T^(n+1) x))|``.

    ``W_n`` is the window sum over ``[-n, n]``, i.e. ``(2n+1) B_n``; ``shifted``
    must be the trace at ``Tx`` with the same observable and horizon.
    """
    if trace.N != shifted.N:
        raise MismatchedTraces(f"horizons differ: {trace.N} vs {shifted.N}")
    _overlap_check(trace, shifted, 1)
    N = trace.N
    n = np.arange(1, N + 1)
    left = trace.window.values[N - n]              # f(T^-n x)
    right = shifted.window.values[shifted.N + n]   # f(T^n (Tx))
    if trace.exact and shifted.exact:
        lhs = trace.window_sums[1:] - shifted.window_sums[1:]
        rhs = left.astype(np.int64) - right.astype(np.int64)
        return int(np.max(np.abs(lhs - rhs)))
    lhs = trace.window_sums[1:].astype(np.float64) - shifted.window_sums[1:]
    return float(np.max(np.abs(lhs - (left - right))))


def cross_identity_check(trace: AveragesTrace, previous: AveragesTrace):
    """Max over ``n`` of ``|(2n+1) B_n(x) - (n+1) A+_{n+1}(x) - n A-_n(T^-1 x)|``.

    ``previous`` is an independently computed trace at ``T^-1 x``.
    """
    if trace.N != previous.N:
        raise MismatchedTraces(f"horizons differ: {trace.N} vs {previous.N}")
    _overlap_check(trace, previous, -1)
    N = trace.N
    n = np.arange(1, N + 1)
    lhs = trace.window_sums[1:]
    if trace.exact and previous.exact:
        return int(np.max(np.abs(lhs - trace.forward_sums[n + 1] - previous.backward_sums[n])))
    dev = lhs - trace.forward_sums[n + 1].astype(np.float64) - previous.backward_sums[n]
    return float(np.max(np.abs(dev)))


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class ClassificationReport:
    burn_in: int
    tolerance: float
    horizon: int
    running_max: dict = field(default_factory=dict)
    running_min: dict = field(default_factory=dict)
    drift_slope: dict = field(default_factory=dict)
    verdict: str = "Undetermined"
    c_estimate: float | None = None
    orientation: str | None = None

    @property
    def label(self) -> str:
        if self.verdict == "Case1":
            return f"Case1({self.c_estimate:.6g}) [{CAVEAT}]"
        if self.verdict == "Case2-pattern":
            return f"Case2-pattern({self.orientation}, c~{self.c_estimate}) [{CAVEAT}]"
        return f"Undetermined [{CAVEAT}]"

    def to_dict(self) -> dict:
        return {
            "burn_in": self.burn_in,
            "tolerance": self.tolerance,
            "horizon": self.horizon,
            "running_max": self.running_max,
            "running_min": self.running_min,
            "drift_slope": self.drift_slope,
            "verdict": self.verdict,
            "c_estimate": self.c_estimate,
            "orientation": self.orientation,
            "label": self.label,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _slope(n: np.ndarray, y: np.ndarray) -> float:
    if n.size < 2:
        return 0.0
    nc = n - n.mean()
    denom = float(np.dot(nc, nc))
    return float(np.dot(nc, y - y.mean()) / denom) if denom else 0.0


def classify_trace(trace: AveragesTrace, burn_in: int | None = None, tol: float = 0.01) -> ClassificationReport:
    """Label the after-burn-in behaviour of a trace.

    ``Case1`` when ``a_plus``, ``a_minus`` and ``b`` all stay within ``tol`` of
    a common value; ``Case2-pattern`` when one one-sided average dips below
    ``-1/tol`` while the other spikes above ``+1/tol`` and ``b`` does both;
    otherwise ``Undetermined``.  The label says nothing about the actual limit.
    """
    if burn_in is None:
        burn_in = trace.N // 10
    if not 0 <= burn_in < trace.N:
        raise ValueError("burn_in must lie in [0, N)")
    sel = slice(burn_in, trace.N)
    n = trace.n[sel].astype(np.float64)
    seqs = {"a_plus": trace.a_plus[sel], "a_minus": trace.a_minus[sel], "b": trace.b[sel]}
    rep = ClassificationReport(burn_in=burn_in, tolerance=tol, horizon=trace.N)
    for name, s in seqs.items():
        rep.running_max[name] = float(np.max(s))
        rep.running_min[name] = float(np.min(s))
        rep.drift_slope[name] = _slope(n, s)
    hi = max(rep.running_max.values())
    lo = min(rep.running_min.values())
    spike = 1.0 / tol
    b_both = rep.running_max["b"] > spike and rep.running_min["b"] < -spike
    if hi - lo <= 2 * tol:
        rep.verdict, rep.c_estimate = "Case1", (hi + lo) / 2
    elif b_both and rep.running_min["a_plus"] < -spike and rep.running_max["a_minus"] > spike:
        rep.verdict, rep.orientation = "Case2-pattern", "forward-low"
        top = rep.running_max["a_plus"]
        rep.c_estimate = top if top <= spike else float("inf")
    elif b_both and rep.running_min["a_minus"] < -spike and rep.running_max["a_plus"] > spike:
        rep.verdict, rep.orientation = "Case2-pattern", "backward-low"
        top = rep.running_max["a_minus"]
        rep.c_estimate = top if top <= spike else float("inf")
    return rep


def oscillation_count(trace: AveragesTrace, c: float = 0.0, burn_in: int = 0) -> tuple[int, int, int]:
    """Counts of ``n`` in ``(burn_in, N]`` with ``B_n`` above, below and at ``c``.

    Integer-valued traces compare window sums exactly; otherwise a hit is
    ``|B_n - c| <= 1e-12``.
    """
    if not 0 <= burn_in < trace.N:
        raise ValueError("burn_in must lie in [0, N)")
    n = trace.n[burn_in:]
    if trace.exact and float(c).is_integer():
        diff = trace.window_sums[n] - int(c) * (2 * n + 1)
        above, below = diff > 0, diff < 0
        hit = diff == 0
    else:
        diff = trace.b[burn_in:] - c
        hit = np.abs(diff) <= HIT_TOL
        above, below = (diff > 0) & ~hit, (diff < 0) & ~hit
    return int(above.sum()), int(below.sum()), int(hit.sum())


@dataclass(frozen=True)
class DominationRun:
    length: int
    full_run: bool
    N0: int
    N: int
    q: int


def domination_run(system: System, x, f: Observable, q: int, N0: int, N: int) -> DominationRun:
    """Longest terminal run of ``n`` in ``(N0, N]`` with ``f(T^-n x) < f(T^(n+q) x)``."""
    if not 0 <= N0 < N:
        raise ValueError("need 0 <= N0 < N")
    win = orbit_window(system, x, N, q, f)
    return domination_from_window(win, N0, N)


def domination_from_window(win: OrbitWindow, N0: int, N: int) -> DominationRun:
    n = np.arange(N0 + 1, N + 1)
    ok = win.values[win.n - n] < win.values[win.n + n + win.q]
    bad = np.flatnonzero(~ok)
    length = int(ok.size if bad.size == 0 else ok.size - 1 - bad[-1])
    return DominationRun(length, length == N - N0, N0, N, win.q)
