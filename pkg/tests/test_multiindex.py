import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landaulab.errors import DimensionError, IndexRangeError
from landaulab.multiindex import (
    MultiIndex,
    binomial,
    count_order,
    enumerate_indices,
    fit_bound_constant,
    grouped_order_sums,
    indices_of_order,
    inverse_order_sums,
    representatives,
    sub_index_counts,
)

small_index = st.integers(2, 3).flatmap(lambda d: st.lists(st.integers(0, 4), min_size=d, max_size=d)).map(
    lambda c: MultiIndex(tuple(c))
)


def test_components_validated():
    with pytest.raises(IndexRangeError):
        MultiIndex((1, -1))
    a = MultiIndex.of(2, 0, 1)
    assert a.order == 3 and a.d == 3 and str(a) == "2,0,1"
    assert MultiIndex.parse(" (2, 0, 1) ") == a


def test_partial_order_is_componentwise():
    assert MultiIndex.of(1, 0) <= MultiIndex.of(1, 1)
    assert not MultiIndex.of(2, 0) <= MultiIndex.of(1, 1)
    assert not MultiIndex.of(1, 1) <= MultiIndex.of(2, 0)
    with pytest.raises(DimensionError):
        MultiIndex.of(1, 0) <= MultiIndex.of(1, 0, 0)


def test_subtraction_requires_order():
    with pytest.raises(IndexRangeError):
        MultiIndex.of(1, 0) - MultiIndex.of(0, 1)
    assert MultiIndex.of(2, 1) - MultiIndex.of(1, 1) == MultiIndex.of(1, 0)


@pytest.mark.parametrize(
    "mu, lo, hi, expected",
    [
        ((1, 1, 0), 1, 2, {(1, 0, 0), (0, 1, 0), (1, 1, 0)}),
        ((0, 0, 0), 0, 0, {(0, 0, 0)}),
        ((2, 1, 0), 1, 1, {(1, 0, 0), (0, 1, 0)}),
    ],
)
def test_enumerate_examples(mu, lo, hi, expected):
    got = enumerate_indices(mu, lo, hi)
    assert {b.components for b in got} == expected
    assert len(got) == len(expected)


def test_enumerate_is_lexicographic():
    got = [b.components for b in enumerate_indices((2, 1), 0, 3)]
    assert got == sorted(got)


@pytest.mark.parametrize("lo, hi", [(-1, 1), (2, 1), (0, 4)])
def test_enumerate_bad_range(lo, hi):
    with pytest.raises(IndexRangeError):
        enumerate_indices((1, 1, 1), lo, hi)


@pytest.mark.parametrize("d, l, n", [(3, 2, 6), (3, 0, 1), (2, 3, 4)])
def test_count_order_examples(d, l, n):
    assert count_order(d, l) == n


def test_count_order_rejects_dimension():
    with pytest.raises(DimensionError):
        count_order(4, 2)


def test_count_order_matches_brute_force_d3():
    for l in range(31):
        assert count_order(3, l) == (l + 1) * (l + 2) // 2
        brute = [b for b in enumerate_indices((l, l, l), l, l)]
        assert len(brute) == count_order(3, l)
        assert len(indices_of_order(3, l)) == count_order(3, l)


@pytest.mark.parametrize("mu, beta, val", [((2, 1, 0), (1, 1, 0), 2), ((4, 0, 0), (2, 0, 0), 6), ((3, 5, 2), (0, 0, 0), 1)])
def test_binomial_examples(mu, beta, val):
    assert binomial(mu, beta) == val


def test_binomial_domain():
    with pytest.raises(IndexRangeError):
        binomial((1, 0), (0, 1))


def test_binomial_is_exact_for_huge_orders():
    # Python integers do not overflow; compare against the factorial formula
    mu, beta = (200, 150, 3), (100, 75, 1)
    direct = math.factorial(200) * math.factorial(150) * 6 // (
        math.factorial(100) ** 2 * math.factorial(75) ** 2 * 2
    )
    assert binomial(mu, beta) == direct


def test_vandermonde_total():
    for mu in enumerate_indices((4, 4, 4), 0, 12):
        assert sum(binomial(mu, b) for b in enumerate_indices(mu, 0, mu.order)) == 2**mu.order


@given(small_index)
def test_vandermonde_by_order(mu):
    for k in range(mu.order + 1):
        assert sum(binomial(mu, b) for b in enumerate_indices(mu, k, k)) == math.comb(mu.order, k)


@given(small_index)
def test_sub_index_counts_match_enumeration(mu):
    counts = sub_index_counts(mu)
    for l in range(mu.order + 1):
        assert counts[l] == len(enumerate_indices(mu, l, l))


def test_order_sum_examples():
    assert inverse_order_sums((1, 1, 0)) == (2.125, 2.0)
    assert inverse_order_sums((1, 0, 0)) == (1.0, 0.0)
    with pytest.raises(IndexRangeError):
        inverse_order_sums((0, 0, 0))


def test_order_sums_exact_against_grouping():
    for mu in enumerate_indices((20, 20, 20), 1, 20):
        assert inverse_order_sums(mu, exact=True) == grouped_order_sums(mu, exact=True)


def test_order_sums_hand_value():
    # beta <= (2,1): orders 1 (x2), 2 (x2), 3 (x1)
    s1, s2 = inverse_order_sums((2, 1), exact=True)
    assert s1 == 2 + Fraction(2, 8) + Fraction(1, 27)
    assert s2 == 2 * Fraction(1, 2) + 2 * Fraction(1, 4)


@given(small_index.filter(lambda m: m.order > 0), st.permutations(range(3)))
def test_order_sums_permutation_invariant(mu, perm):
    perm = [p for p in perm if p < mu.d]
    permuted = MultiIndex(tuple(mu[i] for i in perm))
    assert inverse_order_sums(mu, exact=True) == inverse_order_sums(permuted, exact=True)


def test_representatives_cover_classes():
    reps = {m.components for m in representatives(3, 6)}
    every = {tuple(sorted(m.components, reverse=True)) for m in enumerate_indices((6, 6, 6), 1, 6)}
    assert reps == every


def test_fit_bound_constant_examples():
    assert fit_bound_constant(2.0, 1, 3) == 1.0
    c20 = fit_bound_constant(2.0, 20, 3)
    c40 = fit_bound_constant(2.0, 40, 3)
    assert math.isfinite(c20) and abs(c40 - c20) / c20 < 0.05
    assert fit_bound_constant(1.1, 20, 3) >= c20
    with pytest.raises(IndexRangeError):
        fit_bound_constant(1.0, 10)


@settings(max_examples=20, deadline=None)
@given(st.floats(1.05, 4.0), st.floats(1.05, 4.0))
def test_fit_bound_constant_monotone_in_sigma(s1, s2):
    lo, hi = sorted((s1, s2))
    assert fit_bound_constant(lo, 10, 3) >= fit_bound_constant(hi, 10, 3)
