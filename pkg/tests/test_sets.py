import logging
import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindyn import sets
from lindyn.density import IndexSet, density_profile
from lindyn.errors import BudgetError, ConstructionError, ParameterError


def test_dyadic_layers_partition_positive_integers():
    h = 4096
    union = np.zeros(h + 1, dtype=int)
    for k in range(1, 14):
        union += sets.dyadic_layer(k, h).mask
    assert union[0] == 0 and np.all(union[1:] == 1)
    assert abs(density_profile(sets.dyadic_layer(3, h), 100).tail_min - 1 / 8) < 0.01


def test_interval_examples():
    assert sets.interval_bounds(8, Fraction(1, 8), 1, 2) == (56, 72)
    fam = sets.geometric_intervals(8, Fraction(1, 8), 4, 10, 10**4)
    assert fam.intervals[1] == (4, 12)
    with pytest.raises(ParameterError):
        sets.geometric_intervals(8, Fraction(1, 4), 1, 3, 100)


def test_interval_condition_examples():
    assert sets.verify_interval_conditions(8, Fraction(1, 8), 20).passed
    assert not sets.verify_interval_conditions(2, Fraction(1, 8), 20).disjoint
    one = sets.verify_interval_conditions(8, Fraction(1, 8), 1)
    assert one.disjoint and one.difference


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 16), st.sampled_from([Fraction(1, 16), Fraction(1, 8), Fraction(3, 16), Fraction(1, 5)]))
def test_closed_forms_imply_brute_force(a, eps):
    closed = sets.verify_interval_conditions(a, eps, 6)
    disjoint, diff, shift = sets.brute_force_interval_conditions(a, eps, 6)
    assert (not closed.disjoint) or disjoint
    assert (not closed.difference) or diff
    assert (not closed.shift) or shift


def _reference_EF(horizon):
    a, eps, b = 8, Fraction(1, 8), 12
    E, F = set(), set()
    for u in range(1, 6):
        lo, hi = (1 - eps) * a**u, (1 + eps) * a**u
        odd_part = u >> ((u & -u).bit_length() - 1)
        layer = (u // odd_part).bit_length()
        for n in range(b, horizon + 1, b):
            if lo <= n <= hi:
                (E if layer == 2 else F if layer == 3 else set()).add(n)
    return sorted(E), sorted(F)


def test_first_E_F_match_reference():
    E, F = sets.build_EF_sets(8, Fraction(1, 8), [12, 80, 448], 1, 10**4)
    refE, refF = _reference_EF(10**4)
    assert E[0].members.tolist() == refE == [60, 72]
    assert F[0].members.tolist() == refF
    assert not (E[0] & F[0])


def test_empty_E_warns(caplog):
    with caplog.at_level(logging.WARNING):
        E, _ = sets.build_EF_sets(8, Fraction(1, 8), [10**5, 10**6], 2, 1000)
    assert not E[0] and "empty" in caplog.text


def test_disjointify_single_set():
    A = [IndexSet.interval(1, 10**5, 10**5)]
    plan = sets.disjointify(A, [5], burn_in=1000)
    b = plan.B[0].members
    assert b.min() >= 5 and np.diff(b).min() >= 10
    assert all(plan.check().values())


def test_disjointify_two_sets():
    h = 10**5
    A = [IndexSet.interval(1, h, h), IndexSet.progression(2, h, offset=2)]
    plan = sets.disjointify(A, [2, 2], burn_in=1000)
    assert all(plan.check().values())
    assert plan.B_tail_min[0] > 0


def test_disjointify_rejects_zero_density():
    with pytest.raises(ConstructionError):
        sets.disjointify([IndexSet.empty(1000)], [1], burn_in=100)


def _pairwise_brute(B, N):
    pts = [(int(n), i) for i, b in enumerate(B) for n in b.members]
    for (n, i), (m, j) in combinations(pts, 2):
        if abs(n - m) < N[i] + N[j]:
            return False
    return True


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_disjointify_conclusions_on_random_families(seed, k):
    rng = np.random.default_rng(seed)
    h = 3000
    A = [IndexSet(rng.random(h + 1) < rng.uniform(0.3, 0.9)) for _ in range(k)]
    N = [int(v) for v in rng.integers(1, 4, size=k)]
    try:
        plan = sets.disjointify(A, N, burn_in=100)
    except ConstructionError:
        return
    for a, b, n in zip(A, plan.B, N):
        assert set(b.members.tolist()) <= set(a.members.tolist())
        assert len(b) == 0 or b.min() >= n
    assert _pairwise_brute(plan.B, N)


def test_bad_set_ratio_and_counts():
    assert sets.full_family_count(4) == 11
    assert sets.full_family_count(2) == 3
    A = sets.build_bad_set([4], "full")
    assert A.horizon == 2**11 * 4 - 1
    assert density_profile(A).tail_min >= 0.25


def test_bad_set_families_follow_bitmask_order():
    fam = [m.tolist() for m in sets.bad_set_plan([3])[0].families]
    assert fam == [[0, 1], [0, 2], [1, 2], [0, 1, 2]]


def test_sparse_thinning_warns(caplog):
    with caplog.at_level(logging.WARNING):
        sets.disjointify([IndexSet.from_members([3], 1000)], [1], burn_in=100)
    assert "zero tail density" in caplog.text


def test_bad_set_block_structure_sampled():
    J = [2, 32]
    mode = ("sampled", 4, 7)
    levels = sets.bad_set_plan(J, mode)
    A = sets.build_bad_set(J, mode)
    assert A == sets.build_bad_set(J, mode)
    lv1, lv2 = levels
    assert A.horizon == lv2.M - 1 == 3**4 * 32 - 1
    for n in range(lv1.M, lv2.J):
        assert n in A
    for j, fam in enumerate(lv2.families):
        for s in range(3**j, 3 ** (j + 1)):
            block = [n - s * 32 for n in range(s * 32, (s + 1) * 32) if n in A]
            assert block == fam.tolist()


def test_bad_set_errors():
    with pytest.raises(BudgetError):
        sets.build_bad_set([24], "full")
    with pytest.raises(ParameterError):
        sets.bad_set_plan([4, 5])
