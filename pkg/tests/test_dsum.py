import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lindyn import dsum
from lindyn.errors import ArithmeticModeError, ParameterError
from lindyn.linop import SparseOperator


@pytest.fixture(scope="module")
def space():
    return dsum.DSumSpace.dyadic(4, 16)


def unit(space, l, k):
    x = [Fraction(0)] * space.dim
    x[space.index(l, k)] = Fraction(1)
    return x


def test_diagonal_scaling(space):
    D = dsum.build_dsum_ops(space)["D"]
    assert D.apply(unit(space, 2, 3))[space.index(2, 3)] == Fraction(1, 64)


def test_v_first_column(space):
    V = dsum.build_dsum_ops(space)["V"]
    col = V.column(1)
    assert col[1] == Fraction(1, 2) and col[2] == Fraction(1, 4) and 0 not in col


def test_v_apply_matches_matrix(space):
    V = dsum.build_dsum_ops(space)["V"]
    rng = random.Random(1)
    y = [Fraction(rng.randint(-9, 9), 2 ** rng.randint(0, 5)) for _ in range(space.K)]
    assert dsum.v_apply(y, space.K) == V.apply(y)


def test_r0_reads_block_one_only(space):
    ops = dsum.build_dsum_ops(space)
    assert not any(ops["R0"].apply(unit(space, 2, 3)))
    assert dsum.r0_apply(space, unit(space, 2, 3)) == [0] * space.dim
    x = unit(space, 1, 2)
    assert ops["R0"].apply(x) == dsum.r0_apply(space, x)


def test_index_raising(space):
    ops = dsum.build_dsum_ops(space)
    for name in ("T", "T1", "D"):
        assert dsum.never_raises_index(ops[name], space.K)
    assert not dsum.never_raises_index(ops["R0"], space.K)


@pytest.mark.parametrize("L,K", [(1, 16), (5, 64)])
def test_intertwining(L, K):
    assert dsum.check_intertwining(dsum.DSumSpace.dyadic(L, K)).passed


def test_perturbed_scaling_breaks_intertwining(space):
    D = dsum.build_dsum_ops(space)["D"]
    i = space.index(2, 3)
    bad = D.with_entry(i, i, D.entry(i, i) * 2)
    assert not dsum.check_intertwining(space, D=bad).passed


def test_float_scaling_refused(space):
    with pytest.raises(ArithmeticModeError):
        dsum.check_intertwining(space, D=dsum.build_dsum_ops(space)["D"].to_float())


def test_crucial_estimate_examples(space):
    r = dsum.crucial_estimate_check(space, unit(space, 1, 3), 2)
    assert r.m == 3 and all(d == 0 for d in r.deltas.values())
    x = [Fraction(0)] * space.dim
    x[space.index(1, 1)] = x[space.index(1, 2)] = Fraction(1)
    r = dsum.crucial_estimate_check(space, x, 1)
    assert r.deltas[1] == Fraction(1, 2) and r.deltas[5] == Fraction(1, 32)
    assert r.passed and r.max_ratio == Fraction(1, 2)
    with pytest.raises(ParameterError):
        dsum.crucial_estimate_check(space, x, 1, [0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4))
def test_crucial_estimate_random(space, seed, m, l):
    x = dsum.random_dyadic_vector(space, random.Random(seed), m=m)
    assert dsum.crucial_estimate_check(space, x, l).passed


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_rank_one_interpolation(space, seed):
    rng = random.Random(seed)
    u = dsum.random_dyadic_vector(space, rng)
    u[0] = u[0] or Fraction(1)
    v = dsum.random_dyadic_vector(space, rng)
    R = dsum.build_R(space, u, v)
    assert R.apply(u) == v
    assert (R - dsum.build_dsum_ops(space)["R0"]).rank() <= 1


def test_build_R_special_cases(space):
    R0 = dsum.build_dsum_ops(space)["R0"]
    u = unit(space, 1, 0)
    assert dsum.build_R(space, u, R0.apply(u)) == R0
    with pytest.raises(ParameterError):
        dsum.build_R(space, unit(space, 1, 1), u)


def test_norm_bounds(space):
    assert dsum.v_norm(space) < 1
    T1 = dsum.build_dsum_ops(space)["T1"]
    assert dsum.block_norm_bound(T1, space) == 2
    assert dsum.block_norm_bound(SparseOperator.identity(space.dim), space) == 1


def test_envelope(space):
    y = [Fraction(0)] * space.dim
    for l in range(1, space.L + 1):
        y[space.index(l, 0)] = Fraction(1, 2)
        y[space.index(l, 3)] = Fraction(-1, 2)
    assert dsum.envelope_check(space, y)
    with pytest.raises(ParameterError):
        dsum.envelope_check(space, [Fraction(2)] + [Fraction(0)] * (space.dim - 1))


def test_invertibility(space):
    R0 = dsum.build_dsum_ops(space)["R0"]
    assert dsum.invertibility(R0, 2.0)["invertible"]


def test_csv_roundtrip(space):
    x = dsum.random_dyadic_vector(space, random.Random(5))
    text = dsum.vector_to_csv(space, x)
    assert text.splitlines()[0] == "l,k,numerator,log2denominator"
    assert dsum.vector_from_csv(space, text) == x


def test_space_from_json():
    s = dsum.DSumSpace.from_json('{"L": 2, "K": 4, "eps_rule": "dyadic"}')
    assert s.eps_seq == (Fraction(1, 2), Fraction(1, 4))
    with pytest.raises(ParameterError):
        dsum.DSumSpace.from_json('{"L": 2, "K": 4, "eps_rule": "harmonic"}')
