import math

import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings, strategies as st

from klevel.stats import betainc, mean_std, student_t_test, t_cdf, t_test, welch_t_test

A, B = [1, 2, 3, 4, 5], [6, 7, 8, 9, 10]


def test_textbook_fixture():
    r = welch_t_test(A, B)
    assert r.t == pytest.approx(-5.0)
    assert r.df == pytest.approx(8.0)
    assert r.p == pytest.approx(0.00104, abs=1e-4)
    assert r.significant


def test_identical_samples():
    r = welch_t_test([3, 3, 3], [3, 3, 3])
    assert (r.t, r.p, r.significant) == (0.0, 1.0, False)
    assert r.flags
    r = welch_t_test([1, 2, 3], [1, 2, 3])
    assert r.t == 0 and r.p == pytest.approx(1.0)


def test_zero_variance_different_means():
    r = welch_t_test([1, 1], [2, 2])
    assert r.p == 0.0 and math.isinf(r.t)


def test_input_checks():
    with pytest.raises(ValueError):
        welch_t_test([1], [1, 2])
    with pytest.raises(ValueError):
        welch_t_test([1, float("nan")], [1, 2])


@pytest.mark.parametrize("df,t,expected", [
    # two-sided critical values from standard t tables
    (1, 12.706, 0.05), (5, 2.571, 0.05), (10, 2.228, 0.05), (30, 2.042, 0.05), (8, 3.355, 0.01),
])
def test_against_printed_table(df, t, expected):
    assert 2 * (1 - t_cdf(t, df)) == pytest.approx(expected, abs=5e-4)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 50), st.floats(0.05, 50), st.floats(0, 1))
def test_betainc_matches_reference(a, b, x):
    assert betainc(a, b, x) == pytest.approx(scipy.special.betainc(a, b, x), abs=1e-10)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@settings(max_examples=150, deadline=None)
@given(st.lists(finite, min_size=2, max_size=12), st.lists(finite, min_size=2, max_size=12))
def test_matches_reference_and_is_symmetric(a, b):
    mine = welch_t_test(a, b)
    swapped = welch_t_test(b, a)
    assert swapped.p == pytest.approx(mine.p, abs=1e-12)
    assert swapped.t == pytest.approx(-mine.t) or (math.isinf(mine.t) and math.isinf(swapped.t))
    if mine.flags:
        return
    ref = scipy.stats.ttest_ind(a, b, equal_var=False)
    assert mine.t == pytest.approx(ref.statistic, rel=1e-6, abs=1e-9)
    assert mine.p == pytest.approx(ref.pvalue, abs=1e-6)


def test_pooled_variant():
    a, b = [0.6, 0.7, 0.65, 0.8], [0.4, 0.5, 0.45, 0.6, 0.35]
    ref = scipy.stats.ttest_ind(a, b, equal_var=True)
    r = t_test(a, b, equal_var=True)
    assert r == student_t_test(a, b)
    assert r.t == pytest.approx(ref.statistic) and r.p == pytest.approx(ref.pvalue, abs=1e-9)


def test_win_rate_vectors_against_reference():
    kr = [0.7, 0.6, 0.8, 0.5, 0.7, 0.6, 0.9, 0.6, 0.7, 0.5]
    direct = [0.2, 0.3, 0.1, 0.2, 0.4, 0.3, 0.2, 0.1, 0.3, 0.2]
    ref = scipy.stats.ttest_ind(kr, direct, equal_var=False)
    assert welch_t_test(kr, direct).p == pytest.approx(ref.pvalue, abs=1e-6)


def test_mean_std():
    assert mean_std([2.0]) == (2.0, 0.0)
    m, s = mean_std([1, 2, 3, 4])
    assert m == 2.5 and s == pytest.approx(1.2909944)
    with pytest.raises(ValueError):
        mean_std([])
