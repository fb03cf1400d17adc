from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindyn.density import (
    BlockVector, IndexSet, c0_sum_of_ell1, density_profile, ellp, set_algebra, syndetic_gap, visit_set,
)
from lindyn.errors import ArithmeticModeError, DomainError, ParameterError
from lindyn.linop import SparseOperator
from lindyn.sets import dyadic_layer


def masks(min_h=10, max_h=400):
    return st.integers(min_h, max_h).flatmap(
        lambda h: st.lists(st.booleans(), min_size=h + 1, max_size=h + 1).map(np.array)
    )


def test_evens_profile():
    prof = density_profile(IndexSet.progression(2, 1000), burn_in=100)
    assert prof.ratio(9) == Fraction(1, 2)
    assert abs(prof.tail_min - 0.5) < 1e-12 and prof.tail_max <= 0.5 + 1 / 101


def test_empty_profile():
    prof = density_profile(IndexSet.empty(100), burn_in=10)
    assert prof.tail_min == prof.tail_max == 0.0


def test_second_layer_ratio():
    A2 = dyadic_layer(2, 100)
    assert A2.members[:3].tolist() == [2, 6, 10]
    assert density_profile(A2).ratio(19) == Fraction(1, 4)


def test_burn_in_out_of_range():
    with pytest.raises(ParameterError):
        density_profile(IndexSet.empty(10), burn_in=11)


def test_csv_header():
    text = density_profile(IndexSet.from_members([0, 3], 4)).to_csv()
    assert text.splitlines()[0] == "N,count,ratio"
    assert text.splitlines()[4].startswith("3,2,")


def test_syndetic_examples():
    assert syndetic_gap(IndexSet.progression(5, 100)).gap == 5
    r = syndetic_gap(IndexSet.from_members([0], 10))
    assert (r.gap, r.trailing_gap) == (0, 10)
    assert syndetic_gap(dyadic_layer(3, 1000)).gap == 8
    with pytest.raises(DomainError):
        syndetic_gap(IndexSet.empty(5))


def test_set_algebra_examples():
    a = IndexSet.from_members([1, 2, 3], 10)
    b = IndexSet.from_members([3, 4], 10)
    assert set_algebra("union", a, b).members.tolist() == [1, 2, 3, 4]
    assert set_algebra("intersect", a, b).members.tolist() == [3]
    assert set_algebra("difference", a, b).members.tolist() == [1, 2]
    assert set_algebra("translate", a, 8).members.tolist() == [9, 10]
    with pytest.raises(ParameterError):
        set_algebra("xor", a, b)


def test_text_roundtrip():
    a = IndexSet.from_members([0, 7, 99], 120)
    assert IndexSet.from_text(a.to_text()) == a
    with pytest.raises(ParameterError):
        IndexSet.from_text("0\n1\n")


def test_visit_set_identity_and_shift():
    x = BlockVector([1, 0])
    I = SparseOperator.identity(2)
    assert visit_set(I, x, x, Fraction(1, 2), 20).members.tolist() == list(range(21))
    T = SparseOperator.from_dense([[0, 0], [2, 0]])
    assert visit_set(T, x, x, Fraction(1, 2), 20).members.tolist() == [0]


def test_visit_set_sign_flip():
    T = SparseOperator.from_dense([[-1]])
    x = BlockVector([1])
    assert visit_set(T, x, x, Fraction(1, 2), 10).members.tolist() == [0, 2, 4, 6, 8, 10]


def test_visit_set_errors():
    T = SparseOperator.identity(2)
    with pytest.raises(ParameterError):
        visit_set(T, BlockVector([1, 0, 0]), BlockVector([1, 0, 0]), 1, 5)
    with pytest.raises(ParameterError):
        visit_set(T, BlockVector([1, 0]), BlockVector([1, 0]), 0, 5)


def test_exact_overflow_asks_for_float():
    T = SparseOperator.from_dense([[2**3000]])
    with pytest.raises(ArithmeticModeError, match="float"):
        visit_set(T, BlockVector([1]), BlockVector([0]), 1, 10)


def test_norms():
    v = BlockVector([1, -2, Fraction(1, 2), 0], c0_sum_of_ell1(2))
    assert v.norm() == 3
    assert BlockVector([3, -4], ellp(1)).norm() == 7
    assert abs(BlockVector([3.0, 4.0], ellp(2)).norm() - 5) < 1e-12
    with pytest.raises(ParameterError):
        BlockVector([1, 2, 3], c0_sum_of_ell1(2))


@settings(max_examples=80, deadline=None)
@given(masks())
def test_counts_are_recounted(mask):
    s = IndexSet(mask)
    prof = density_profile(s)
    n = len(mask) - 1
    assert prof.ratio(n) == Fraction(int(mask.sum()), n + 1)
    k = n // 2
    assert prof.counts[k] == sum(1 for m in s.members if m <= k)


@settings(max_examples=80, deadline=None)
@given(masks(), masks())
def test_union_profile_is_subadditive(m1, m2):
    h = min(len(m1), len(m2)) - 1
    a, b = IndexSet(m1[: h + 1]), IndexSet(m2[: h + 1])
    pu, pa, pb = density_profile(a | b), density_profile(a), density_profile(b)
    assert np.all(pu.counts <= pa.counts + pb.counts)
    assert np.all(pu.counts >= np.maximum(pa.counts, pb.counts))


@settings(max_examples=80, deadline=None)
@given(masks(min_h=50), st.integers(0, 20), st.integers(1, 40))
def test_translation_moves_tail_by_at_most_t_over_burn_in(mask, t, burn_in):
    s = IndexSet(mask)
    a = density_profile(s, burn_in)
    b = density_profile(s.translate(t), burn_in)
    assert abs(a.tail_min - b.tail_min) <= t / (burn_in + 1) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=4, max_size=4), st.lists(st.integers(-2, 2), min_size=2, max_size=2))
def test_visit_sets_nested_in_radius(entries, x):
    T = SparseOperator.from_dense([[Fraction(e, 4) for e in entries[:2]], [Fraction(e, 4) for e in entries[2:]]])
    xv = BlockVector(x)
    small = visit_set(T, xv, xv, Fraction(1, 4), 15)
    big = visit_set(T, xv, xv, Fraction(1), 15)
    assert not (small - big)
    assert 0 in small
