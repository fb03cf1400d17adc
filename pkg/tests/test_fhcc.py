from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindyn import fhcc
from lindyn.density import BlockVector, IndexSet
from lindyn.errors import ParameterError, RankError
from lindyn.linop import SparseOperator, exact_rank
from lindyn.shifts import WeightSystem


def test_single_target_orbit_stays_in_ball():
    H, K = 5000, 6000
    w = WeightSystem.constant(2, K + 10)
    A = [IndexSet.interval(1, H, H)]
    plan = fhcc.fhcc_vector(w, [[1.0]], A, [0.25], K, H, burn_in=500)
    b = plan.B[0].members
    assert b.min() >= plan.N[0] and np.diff(b).min() >= 2 * plan.N[0]
    assert all(plan.error(int(n), 1) < 0.25 for n in b)
    assert plan.split_le[0] + plan.split_gt[0] <= plan.eps[0] + 1e-15


def test_two_targets():
    H, K = 4000, 5000
    w = WeightSystem.constant(2, K + 10)
    A = [IndexSet.progression(2, H, offset=1), IndexSet.progression(2, H, offset=2)]
    plan = fhcc.fhcc_vector(w, [[1.0], [0.5, -1.0]], A, [0.125, 0.125], K, H, burn_in=500)
    assert plan.N[1] >= plan.N[0]
    for p in (1, 2):
        for n in plan.B[p - 1].members:
            assert plan.error(int(n), p) < 3 * 0.125 + plan.slack
    assert all(plan.inequality)


def test_refuses_short_truncation():
    w = WeightSystem.constant(2, 200)
    with pytest.raises(ParameterError, match="truncation"):
        fhcc.fhcc_vector(w, [[0, 0, 1.0]], [IndexSet.interval(1, 100, 100)], [0.1], 101, 100)


def test_refuses_non_expanding_weights():
    w = WeightSystem.constant(1, 300)
    with pytest.raises(ParameterError):
        fhcc.fhcc_vector(w, [[1.0]], [IndexSet.interval(1, 100, 100)], [0.1], 200, 100)


def test_manifest_writes_sets(tmp_path):
    w = WeightSystem.constant(2, 3000)
    plan = fhcc.fhcc_vector(w, [[1.0]], [IndexSet.interval(1, 2000, 2000)], [0.25], 2500, 2000, burn_in=200)
    man = plan.manifest(str(tmp_path))
    text = (tmp_path / man["B_files"][1]).read_text()
    assert IndexSet.from_text(text) == plan.B[0]


def test_orbit_report_trivial_cases():
    T = SparseOperator.identity(2)
    A = [IndexSet.progression(3, 30)]
    rep = fhcc.orbit_density_report(T, BlockVector([1, 0]), [[1, 0]], [0.5], A, 30, 5)
    assert rep.visits[0] == A[0]
    rep = fhcc.orbit_density_report(T, BlockVector([0, 0]), [[1, 0]], [0.5], A, 30, 5)
    assert not rep.visits[0]


def test_orbit_report_radius_monotone():
    T = SparseOperator.from_dense([[Fraction(1, 2), 0], [0, -1]])
    x = BlockVector([1, 1])
    A = [IndexSet.interval(0, 20, 20)] * 2
    rep = fhcc.orbit_density_report(T, x, [[0, 1], [0, 1]], [0.1, 0.6], A, 20, 2)
    assert not (rep.visits[0] - rep.visits[1])


def test_interpolation_examples():
    S = SparseOperator.identity(3)
    z = [[1, 0, 0], [1, 1, 0]]
    x = [[0, 2, 0], [0, 0, 1]]
    out = fhcc.similarity_interpolation(S, list(zip(z, x)), 100.0)
    assert all(out.op.apply(a) == b for a, b in zip(z, x))
    with pytest.raises(RankError):
        fhcc.similarity_interpolation(S, [([1, 0, 0], x[0]), ([2, 0, 0], x[1])], 1.0)


def test_biorthogonal_functionals():
    z = [[Fraction(v) for v in row] for row in ([1, 2, 0], [0, 1, 1], [1, 0, 1])]
    for l in range(3):
        f = fhcc.biorthogonal(z, l)
        assert [sum(a * b for a, b in zip(f, z[s])) for s in range(l + 1)] == [0] * l + [1]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8).flatmap(lambda d: st.tuples(
    st.just(d),
    st.integers(1, d),
    st.lists(st.integers(-3, 3), min_size=d * d, max_size=d * d),
    st.lists(st.integers(-2, 2), min_size=d * d, max_size=d * d),
    st.lists(st.integers(-4, 4), min_size=d * d, max_size=d * d),
)))
def test_interpolation_property(args):
    d, L, s_entries, z_entries, x_entries = args
    S = SparseOperator.from_dense([[Fraction(v, 2) for v in s_entries[i * d:(i + 1) * d]] for i in range(d)])
    z = [[Fraction(v) for v in z_entries[i * d:(i + 1) * d]] for i in range(L)]
    xs = [[Fraction(v, 4) for v in x_entries[i * d:(i + 1) * d]] for i in range(L)]
    if exact_rank(z) < L:
        with pytest.raises(RankError):
            fhcc.similarity_interpolation(S, list(zip(z, xs)), 1.0)
        return
    out = fhcc.similarity_interpolation(S, list(zip(z, xs)), 1.0)
    assert all(out.op.apply(a) == b for a, b in zip(z, xs))
    assert (out.op - S).rank() <= L
