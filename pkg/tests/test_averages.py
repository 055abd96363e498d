import csv
import math
import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilateral import averages
from bilateral.averages import (CSV_HEADER, averages_trace, classify_trace, cross_identity_check,
                                domination_run, oscillation_count, residual_identity_check)
from bilateral.dynsys import (CircleRotation, CyclicRotation, Odometer, ProductPoint, ProductZmCircle,
                              make_system)
from bilateral.errors import ClampWarning, MismatchedTraces
from bilateral.observables import Constant, SmoothCircle, TableLookup, make_prop1_f, make_remarks_f

CIRCLE = make_system(CircleRotation())
ODO = make_system(Odometer())
PRODUCT = make_system(ProductZmCircle())

tables = st.lists(st.integers(-20, 20), min_size=1, max_size=12)


def _coprime_step(m, k):
    return next(s for s in range(k % m, k % m + m) if math.gcd(s, m) == 1) % m if m > 1 else 0


def test_constant_observable():
    t = averages_trace(CIRCLE, 12345, Constant(2.0), 50, q=3)
    for col in (t.a_plus, t.a_minus, t.b, t.b_q):
        assert np.all(col == 2.0)
    assert np.all(t.d == 0)


def test_forward_average_on_cycle():
    cyc = make_system(CyclicRotation(5, 1))
    t = averages_trace(cyc, 0, TableLookup((1., 2., 3., 4., 5.)), 5)
    assert t.exact
    assert t.a_plus[4] == 3
    assert t.a_minus[0] == 1
    # window [-1, 1] visits states 4, 0, 1
    assert t.b[0] == pytest.approx(8 / 3)


def test_residue_one_bilateral_average_vanishes():
    for seed in range(10):
        x = ProductPoint(1, PRODUCT.sample_point(seed).frac)
        t = averages_trace(PRODUCT, x, make_remarks_f(), 1000)
        assert t.exact
        assert not t.window_sums.any()
        assert not t.b.any()


@pytest.mark.parametrize("case", ["cos-circle", "three_fiber", "prop1", "cyclic"])
def test_identities(case):
    if case == "cos-circle":
        sys_, f, x = CIRCLE, SmoothCircle("cos"), CIRCLE.sample_point(3)
    elif case == "three_fiber":
        sys_, f, x = PRODUCT, make_remarks_f(), PRODUCT.sample_point(3)
    elif case == "prop1":
        sys_, f, x = ODO, make_prop1_f(10), ODO.sample_point(3)
    else:
        sys_, f, x = make_system(CyclicRotation(7, 3)), TableLookup((3., -1., 0., 2., -5., 1., 1.)), 2
    N = 2000
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        t = averages_trace(sys_, x, f, N)
        shifted = averages_trace(sys_, sys_.step(x, 1), f, N)
        prev = averages_trace(sys_, sys_.step(x, -1), f, N)
    scale = max(1.0, float(np.max(np.abs(t.window_sums))))
    assert residual_identity_check(t, shifted) <= 1e-9 * scale
    assert cross_identity_check(t, prev) <= 1e-9 * scale


@settings(max_examples=50, deadline=None)
@given(tables, st.integers(1, 11), st.integers(0, 40), st.integers(1, 60))
def test_integer_identities_are_exact(table, step, x, N):
    m = len(table)
    sys_ = make_system(CyclicRotation(m, _coprime_step(m, step)))
    f = TableLookup(tuple(float(v) for v in table))
    x %= m
    t = averages_trace(sys_, x, f, N)
    assert residual_identity_check(t, averages_trace(sys_, sys_.step(x, 1), f, N)) == 0
    assert cross_identity_check(t, averages_trace(sys_, sys_.step(x, -1), f, N)) == 0


def test_d_with_q1_matches_residual():
    x = CIRCLE.sample_point(8)
    f = SmoothCircle("sin")
    t = averages_trace(CIRCLE, x, f, 500, q=1)
    tx = averages_trace(CIRCLE, CIRCLE.step(x, 1), f, 500, q=1)
    n = t.n
    assert np.allclose(t.d, (t.window_sums[1:] - tx.window_sums[1:]) / n, atol=1e-12)


def test_shifted_window_difference():
    cyc = make_system(CyclicRotation(9, 2))
    f = TableLookup(tuple(float(v) for v in (4, -3, 0, 1, 7, -2, 2, 5, -6)))
    q = 4
    t = averages_trace(cyc, 5, f, 40, q=q)
    for n in t.n:
        extra = sum(t.value(i) for i in range(n + 1, n + q + 1))
        assert (2 * n + 1 + q) * t.b_q[n - 1] - (2 * n + 1) * t.b[n - 1] == pytest.approx(extra, abs=1e-9)


def test_residual_bound():
    f = SmoothCircle("cos")
    t = averages_trace(CIRCLE, CIRCLE.sample_point(0), f, 5000)
    assert np.all(np.abs(t.r) <= 2 * 1.0 / t.n + 1e-15)


def test_classify_constant_and_cosine():
    rep = classify_trace(averages_trace(CIRCLE, 7, Constant(2.0), 1000))
    assert rep.verdict == "Case1" and rep.c_estimate == 2.0
    assert rep.label.startswith("Case1(2)")
    rep = classify_trace(averages_trace(CIRCLE, CIRCLE.sample_point(1), SmoothCircle("cos"), 10 ** 5))
    assert rep.verdict == "Case1" and abs(rep.c_estimate) < 0.01
    assert "finite-horizon" in rep.label


def test_classify_counterexample_is_not_case1():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        t = averages_trace(ODO, ODO.sample_point(0), make_prop1_f(), 4 ** 8)
    assert classify_trace(t).verdict != "Case1"


def test_oscillation_counts():
    t = averages_trace(PRODUCT, ProductPoint(1, PRODUCT.sample_point(2).frac), make_remarks_f(), 300)
    assert oscillation_count(t) == (0, 0, 300)
    assert oscillation_count(t, burn_in=100) == (0, 0, 200)
    t = averages_trace(CIRCLE, 0, Constant(1.0), 50)
    assert oscillation_count(t) == (50, 0, 0)
    assert oscillation_count(t, c=1.5) == (0, 50, 0)
    cyc = make_system(CyclicRotation(2, 1))
    t = averages_trace(cyc, 0, TableLookup((1., -1.)), 6)
    # W_n = +1 for even n and -1 for odd n
    assert oscillation_count(t) == (3, 3, 0)


def _naive_run(sys_, f, x, q, N0, N):
    vals = {i: averages_trace(sys_, x, f, N, q).value(i) for i in range(-N, N + q + 1)}
    length = 0
    for n in range(N, N0, -1):
        if vals[-n] < vals[n + q]:
            length += 1
        else:
            break
    return length


def test_domination_examples():
    assert domination_run(CIRCLE, 0, Constant(1.0), 0, 0, 10).length == 0
    cyc = make_system(CyclicRotation(2, 1))
    f = TableLookup((1., 0.))
    # q = 1 on Z/2 from x = 0: domination holds exactly at odd n
    assert domination_run(cyc, 0, f, 1, 0, 10).length == 0
    assert domination_run(cyc, 0, f, 1, 0, 9).length == 1
    run = domination_run(cyc, 0, f, 1, 8, 9)
    assert run.full_run and run.length == 1


def test_domination_matches_naive_on_cycles():
    rng = np.random.default_rng(4)
    for _ in range(60):
        m = int(rng.integers(1, 9))
        sys_ = make_system(CyclicRotation(m, _coprime_step(m, int(rng.integers(0, m)))))
        f = TableLookup(tuple(float(v) for v in rng.integers(-3, 4, size=m)))
        q, N = int(rng.integers(0, 4)), int(rng.integers(2, 20))
        N0 = int(rng.integers(0, N))
        for x in range(m):
            got = domination_run(sys_, x, f, q, N0, N)
            assert got.length == _naive_run(sys_, f, x, q, N0, N)
            assert got.full_run == (got.length == N - N0)


def test_mismatched_traces():
    f = SmoothCircle("cos")
    t = averages_trace(CIRCLE, 5, f, 100)
    with pytest.raises(MismatchedTraces):
        residual_identity_check(t, averages_trace(CIRCLE, CIRCLE.step(5, 1), f, 99))
    with pytest.raises(MismatchedTraces):
        residual_identity_check(t, averages_trace(CIRCLE, CIRCLE.step(5, 2), f, 100))
    with pytest.raises(MismatchedTraces):
        cross_identity_check(t, averages_trace(CIRCLE, CIRCLE.step(5, 1), f, 100))


def test_csv_format(tmp_path):
    t = averages_trace(CIRCLE, 11, SmoothCircle("cos"), 20, q=2)
    text = t.to_csv(tmp_path / "trace.csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 21 and [int(r[0]) for r in rows[1:]] == list(range(1, 21))
    assert float(rows[5][1]) == t.a_plus[4]
    assert (tmp_path / "trace.csv").read_text() == text


def test_bilateral_kernel_adds_both_halves():
    fwd = (np.array([3.0]), np.array([0.0]))
    bwd = (np.array([-1.0]), np.array([0.0]))
    assert averages._bilateral_sums(fwd, bwd)[0] == 2.0
