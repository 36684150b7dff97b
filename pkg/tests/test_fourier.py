from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rqclab.bits import BitString, monomial_eval
from rqclab.errors import CapacityError, DegeneratePairError, InputError
from rqclab.fourier import (
    TuplePair, build_f, conjecture1_estimate, fourier_coefficient, fwht, low_support_fraction,
    parity_pair, parseval_check, parseval_exhaustive, reduce_pair, support_distribution,
    support_report,
)


def entries(f):
    return {str(k): v for k, v in f.entries.items()}


@pytest.mark.parametrize("y,x,want", [("00", "11", 1), ("11", "01", -1), ("101", "110", -1)])
def test_monomial_examples(y, x, want):
    assert monomial_eval(y, x) == want


def test_monomial_length_mismatch():
    with pytest.raises(InputError):
        monomial_eval("01", "011")


def test_build_f_examples():
    assert entries(build_f(TuplePair.of(["00"], ["01"]))) == {"00": 1, "01": -1}
    assert entries(build_f(TuplePair.of(["00", "11"], ["11", "00"]))) == {}
    assert entries(build_f(TuplePair.of(["00", "00"], ["01", "11"]))) == {"00": 2, "01": -1, "11": -1}


def test_reduce_pair_examples():
    r = reduce_pair(TuplePair.of(["00", "01"], ["01", "11"]))
    assert [str(b) for b in r.first] == ["00"] and [str(b) for b in r.second] == ["11"] and r.t == 1
    assert reduce_pair(TuplePair.of(["10"], ["10"])).t == 0
    p = TuplePair.of(["00", "00"], ["01", "01"])
    assert reduce_pair(p) == p and p.r == 2


def test_fourier_coefficient_examples():
    f = build_f(TuplePair.of(["00"], ["01"]))
    assert fourier_coefficient(f, "01") == 2
    parity = build_f(TuplePair.of(["00", "11"], ["01", "10"]))
    assert fourier_coefficient(parity, "11") == 4
    empty = build_f(TuplePair.of(["01"], ["01"]))
    assert fourier_coefficient(empty, "10") == 0


@pytest.mark.parametrize("method", ["direct", "dense", "reduced"])
def test_support_report_examples(method):
    r = support_report(build_f(TuplePair.of(["00"], ["01"])), method)
    assert r.support_size == 2 and r.distinguishing_prob == Fraction(1, 2)
    p = support_report(build_f(parity_pair(2)), method)
    assert p.support_size == 1 and p.zero_prob == Fraction(3, 4)
    assert support_report(build_f(TuplePair.of(["11"], ["11"])), method).support_size == 0


def test_parseval_check_examples():
    r = parseval_check(TuplePair.of(["00"], ["01"]))
    assert (r.prob, r.bound, r.holds) == (Fraction(1, 2), Fraction(1, 2), True)
    r = parseval_check(TuplePair.of(["00", "11"], ["01", "10"]))
    assert (r.prob, r.bound, r.holds) == (Fraction(1, 4), Fraction(1, 4), True)
    with pytest.raises(DegeneratePairError):
        parseval_check(TuplePair.of(["00", "11"], ["11", "00"]))


def test_fwht_matches_sign_matrix():
    rng = np.random.default_rng(3)
    a = rng.integers(-3, 4, size=16)
    x = np.arange(16)
    H = np.array([[(-1) ** bin(y & xx).count("1") for xx in x] for y in x])
    assert np.array_equal(fwht(a), H @ a)


def test_low_support_examples():
    assert low_support_fraction(2, 1, 1).exact == Fraction(1, 4)
    assert low_support_fraction(2, 1, 3).exact == 1
    r = low_support_fraction(2, 2, 1)
    assert r.counting_bound == pytest.approx(1.0) and r.vacuous


def test_low_support_capacity():
    with pytest.raises(CapacityError):
        low_support_fraction(5, 3, 1)


def test_low_support_sampled_matches_exact():
    exact = float(low_support_fraction(2, 2, 3).exact)
    s = low_support_fraction(2, 2, 3, mode="sampled", trials=20000, seed=1)
    assert s.ci_low - 0.01 <= exact <= s.ci_high + 0.01


def test_conjecture_small_cases():
    assert conjecture1_estimate(2, 1, 0.0, trials=2000, seed=0).tail_prob == 1.0
    # threshold 2^2 / 2^1 = 2: support is 0 with probability 1/4, otherwise 2
    r = conjecture1_estimate(2, 1, 1.0, trials=20000, seed=0)
    assert r.ci_low <= 0.25 <= r.ci_high


def test_conjecture_deterministic_across_workers():
    a = conjecture1_estimate(10, 16, 1.0, trials=1000, seed=5, workers=1)
    b = conjecture1_estimate(10, 16, 1.0, trials=1000, seed=5, workers=4)
    assert a == b


def test_t1_support_closed_form():
    for n in (1, 2, 3, 5):
        for x2 in range(1, 1 << n):
            rep = support_report(build_f(TuplePair.of([0], [x2], n)))
            assert rep.support_size == 1 << (n - 1)


def test_exhaustive_parseval_n3_t3():
    r = parseval_exhaustive(3, 3)
    assert r.violations == 0 and r.pairs == 2 ** 18


def test_support_distribution_total():
    dist = support_distribution(2, 2)
    assert sum(dist.values()) == 2 ** 8


bits = st.integers(min_value=1, max_value=8).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(1, 4).flatmap(
        lambda t: st.tuples(st.lists(st.integers(0, (1 << n) - 1), min_size=t, max_size=t),
                            st.lists(st.integers(0, (1 << n) - 1), min_size=t, max_size=t)))))


@settings(max_examples=150, deadline=None)
@given(bits)
def test_properties(data):
    n, (a, b) = data
    pair = TuplePair.of(a, b, n)
    f = build_f(pair)
    assert f.total() == 0
    assert build_f(reduce_pair(pair)) == f
    assert fourier_coefficient(f, BitString(0, n)) == 0
    dense = f.dense()
    coeffs = fwht(dense)
    # Parseval
    assert int(np.sum(coeffs ** 2)) == (1 << n) * f.norm2sq
    reports = {m: support_report(f, m) for m in ("direct", "dense", "reduced")}
    assert len({(r.support_size, tuple(sorted(r.coeff_histogram.items()))) for r in reports.values()}) == 1
    rep = reports["dense"]
    # |2^n f^(y)| <= sum_x |f(x)| = 2r, which is <= 2^n once t <= 2^(n-1)
    assert all(abs(c) <= 2 * pair.r for c in rep.coeff_histogram)
    if pair.t <= 1 << (n - 1):
        assert all(abs(c) <= 1 << n for c in rep.coeff_histogram)
    if pair.r > 0:
        assert rep.distinguishing_prob >= Fraction(1, 2 * pair.r) >= Fraction(1, 2 * pair.t)
        red = reduce_pair(pair)
        assert f.norm2sq >= 2 * pair.r  # sum f^2 >= sum |f| = 2r
        if len(set(red.first + red.second)) == 2 * red.t:
            assert f.norm2sq == 2 * pair.r
