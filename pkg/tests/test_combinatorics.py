import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilateral.combinatorics import (BilateralNonpositive, DeltaSet, PointPredicate, WitnessPair,
                                     cover_counts, is_valid_witness, lemma1_exhaustive, lemma1_witness,
                                     lemma2_horizon, lemma2_trace, lemma4_exhaustive, lemma4_witness, passage_times,
                                     passage_times_bruteforce, pilot_lemma2, target_range,
                                     threshold_probe)
from bilateral.dynsys import CircleRotation, CyclicRotation, ProductZmCircle, make_system
from bilateral.errors import BoundExceeded, DensityTooLow, OutOfRange
from bilateral.fixedpoint import GOLDEN_ALPHA, SCALE
from bilateral.observables import (Constant, ScaledSum, SmoothCircle, TableLookup, make_coboundary,
                                   make_remarks_f)

CIRCLE = make_system(CircleRotation())

# Largest cardinality of a set with an unrepresented target, from the brute force below
# over every subset of the range.
MAX_VIOLATING_CARD = {(4, 1): 13, (16, 4): 10}


def _represented(members, a, mode, i):
    s = set(members)
    if mode == 1:
        return any(k + i in s and (k + i) - 2 * k >= a for k in s)
    return any(k + i in s for k in s)


def _brute(a, mode):
    """Per complement size, the number of (set, target) pairs with no witness."""
    lo, hi = (a, 5 * a) if mode == 1 else (2 * a, 3 * a)
    width = hi - lo
    counts = {i: [0] * (width + 1) for i in target_range(a, mode)}
    for bits in product((0, 1), repeat=width):
        members = [lo + t for t, b in enumerate(bits) if b]
        for i in counts:
            if not _represented(members, a, mode, i):
                counts[i][width - len(members)] += 1
    return counts


@pytest.fixture(scope="module")
def brute_small():
    return {(4, 1): _brute(4, 1), (16, 4): _brute(16, 4)}


def test_witness_examples():
    full = DeltaSet.full(8)
    w = lemma1_witness(full, 20)
    assert w == WitnessPair(28, 8) and is_valid_witness(full, 20, w)
    assert lemma4_witness(DeltaSet.full(8, 4), 3) == WitnessPair(19, 16)
    assert lemma1_witness(full.without(range(8, 13)), 20) is None
    with pytest.raises(OutOfRange):
        lemma1_witness(full, 19)
    with pytest.raises(OutOfRange):
        DeltaSet(8, frozenset({3}))
    assert DeltaSet.full(8).density == 1 and DeltaSet(4, frozenset({4, 5})).density == Fraction(1, 8)
    assert not is_valid_witness(full, 20, WitnessPair(27, 7))


def test_witness_checks_are_independent():
    rng = np.random.default_rng(0)
    for _ in range(300):
        a = int(rng.integers(2, 12))
        keep = rng.random(4 * a) < 0.8
        d = DeltaSet(a, frozenset((np.flatnonzero(keep) + a).tolist()))
        for i in target_range(a, 1):
            w = lemma1_witness(d, i)
            assert (w is not None) == _represented(d.members, a, 1, i)
            if w is not None:
                assert is_valid_witness(d, i, w)


def test_cover_counts_match_brute_force(brute_small):
    for (a, mode), counts in brute_small.items():
        width = 4 * a if mode == 1 else a
        for i, row in counts.items():
            assert cover_counts(a, mode, i, width)[0] == row


def test_max_violating_card(brute_small):
    for key, counts in brute_small.items():
        a, mode = key
        width = 4 * a if mode == 1 else a
        smallest = min(s for row in counts.values() for s, c in enumerate(row) if c)
        assert width - smallest == MAX_VIOLATING_CARD[key]
    # no set of cardinality 12 misses a target at a = 16
    assert all(row[4] == 0 for row in brute_small[(16, 4)].values())


def test_threshold_probe():
    d, i = threshold_probe(4, 1)
    assert len(d) == MAX_VIOLATING_CARD[(4, 1)] and lemma1_witness(d, i) is None
    d, i = threshold_probe(16, 4)
    assert len(d) == MAX_VIOLATING_CARD[(16, 4)] and lemma4_witness(d, i) is None


@pytest.mark.parametrize("a", [4, 6, 8, 10])
def test_wide_range_exhaustive_has_no_violations(a):
    rep = lemma1_exhaustive(a)
    assert rep.violations == 0 and rep.complement_max == (a - 1) // 2
    assert rep.sets_checked == sum(math.comb(4 * a, m) for m in range(rep.complement_max + 1))


@pytest.mark.parametrize("a", [8, 16, 32])
def test_narrow_range_exhaustive_has_no_violations(a):
    assert lemma4_exhaustive(a).violations == 0


@pytest.mark.parametrize("a,mode,cap", [(4, 1, 1), (4, 1, 4), (6, 1, 5), (8, 4, 1), (8, 4, 5), (12, 4, 6)])
def test_count_matches_enumeration(a, mode, cap):
    run = lemma1_exhaustive if mode == 1 else lemma4_exhaustive
    counted, listed = run(a, complement_max=cap), run(a, method="enumerate", complement_max=cap)
    assert counted.per_i == listed.per_i


def test_above_threshold_probe_finds_violations():
    assert lemma1_exhaustive(4, complement_max=3).violations > 0
    assert lemma4_exhaustive(16, complement_max=6).violations > 0


def test_exhaustive_bounds_and_report():
    with pytest.raises(BoundExceeded):
        lemma1_exhaustive(21)
    with pytest.raises(BoundExceeded):
        lemma4_exhaustive(65)
    r1, r2 = lemma1_exhaustive(8), lemma1_exhaustive(8)
    assert r1.to_json(timing=False) == r2.to_json(timing=False)
    d = r1.to_dict()
    assert {"a", "mode", "complement_max", "sets_checked", "violations", "per_i", "elapsed_ms"} <= d.keys()
    assert "elapsed_ms" not in r1.to_dict(timing=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 5), st.integers(0, 300), st.integers(0, 2 ** 30))
def test_passage_times_match_brute_force(m, p, R, salt):
    sys_ = make_system(CyclicRotation(m, 1))
    pred = PointPredicate(lambda y: (salt >> (y % 30)) % 3 == 0)
    assert passage_times(sys_, 0, pred, p, R).tolist() == passage_times_bruteforce(sys_, 0, pred, p, R).tolist()


def test_passage_times_simple_sets():
    sys_ = make_system(CyclicRotation(1000, 1))
    assert passage_times(sys_, 0, lambda y: True, 3, 50).tolist() == list(range(50))
    assert passage_times(sys_, 0, lambda y: y % 5 == 0, 0, 30).tolist() == list(range(0, 30, 5))
    assert passage_times(sys_, 0, lambda y: y % 5 == 0, 2, 12).tolist() == [0, 3, 4, 5, 8, 9, 10]
    assert passage_times(sys_, 0, lambda y: False, 4, 100).size == 0
    with pytest.raises(BoundExceeded):
        passage_times(sys_, 0, lambda y: True, 0, 10 ** 7 + 1)


def _union_measure(starts, length):
    pieces = []
    for s in starts:
        e = s + length
        pieces += [(s, min(e, 1.0))] + ([(0.0, e - 1.0)] if e > 1 else [])
    pieces.sort()
    total, cur = 0.0, None
    for lo, hi in pieces:
        if cur is None or lo > cur[1]:
            total += 0 if cur is None else cur[1] - cur[0]
            cur = [lo, hi]
        else:
            cur[1] = max(cur[1], hi)
    return total + cur[1] - cur[0]


def test_circle_interval_passage_density():
    width, p, R = 0.1, 3, 10 ** 5
    pred = lambda y: y * SCALE < width
    alpha = GOLDEN_ALPHA * SCALE
    expected = _union_measure([(-i * alpha) % 1.0 for i in range(p + 1)], width)
    got = passage_times(CIRCLE, CIRCLE.sample_point(0), pred, p, R).size / R
    assert abs(got - expected) <= 0.01


def test_bilateral_nonpositive_mask():
    cyc = make_system(CyclicRotation(4, 1))
    f = TableLookup((1., -1., -1., 1.))
    V = BilateralNonpositive(f, 0, 3)
    mask = V.mask(cyc, 0, 0, 4)
    for y in range(4):
        vals = [f.evaluate(cyc, np.array([(y + i) % 4]))[0] for i in range(-3, 4)]
        sums = [sum(vals[3 - n:4 + n]) for n in range(4)]
        assert mask[y] == all(s <= 0 for s in sums)


def test_passage_replay_constant_negative():
    rep = lemma2_trace(CIRCLE, 17, Constant(-1.0), 1, 0, lambda y: True, 256)
    assert rep.all_hold and rep.n_checked == len(target_range(256, 1))
    assert rep.max_pairing_error == 0
    assert rep.density == 1


def test_passage_replay_three_fiber():
    prod = make_system(ProductZmCircle())
    f = make_remarks_f()
    x = prod.sample_point(0)
    # V holds only at residue 1, which the orbit visits every third step
    V = BilateralNonpositive(f, 1, lemma2_horizon(256, 2))
    rep = lemma2_trace(prod, x, f, 1, 2, V, 256)
    assert rep.all_hold and rep.max_pairing_error == 0 and rep.density == 1


def test_passage_replay_drifting_coboundary_with_pilot():
    f = ScaledSum(((1.0, Constant(-1.0)), (1.0, make_coboundary(SmoothCircle("cos")))))
    a = 256
    N, p = pilot_lemma2(CIRCLE, f, a, seed=0)
    V = BilateralNonpositive(f, N, lemma2_horizon(a, p))
    for seed in range(3):
        rep = lemma2_trace(CIRCLE, CIRCLE.sample_point(seed), f, N, p, V, a)
        assert rep.all_hold
        assert rep.max_pairing_error <= 1e-9


def test_passage_replay_density_too_low():
    with pytest.raises(DensityTooLow):
        lemma2_trace(CIRCLE, 0, Constant(-1.0), 1, 0, lambda y: False, 64)
    with pytest.raises(ValueError):
        lemma2_trace(CIRCLE, 0, Constant(-1.0), 10, 2, lambda y: True, 16)
