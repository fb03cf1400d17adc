from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindyn import shifts
from lindyn.density import BlockVector, IndexSet
from lindyn.errors import ConstructionError, ParameterError
from lindyn.shifts import TentSpec, WeightSystem


def test_single_tent_profile():
    S = IndexSet.interval(10, 12, 40)
    t = TentSpec(S, 3, IndexSet.interval(7, 15, 40))
    prof = shifts.tent_profile(t, 40)
    assert prof[10:13].tolist() == [3, 3, 3]
    assert prof[7:10].tolist() == [0, 1, 2]
    assert prof[:7].sum() == 0 and prof[16:].sum() == 0


def test_infeasible_tent():
    t = TentSpec(IndexSet.interval(10, 12, 40), 3, IndexSet.interval(9, 13, 40), "narrow")
    with pytest.raises(ConstructionError, match="infeasible"):
        shifts.tent_profile(t, 40)


def test_no_tents_gives_unit_weights():
    w = shifts.plateau_weights([], 50)
    assert np.all(w.weights == 1) and np.all(w.log2W == 0)


def test_overlapping_tents_take_the_max():
    a = TentSpec(IndexSet.interval(10, 10, 40), 2, IndexSet.interval(5, 15, 40))
    b = TentSpec(IndexSet.interval(12, 12, 40), 4, IndexSet.interval(5, 20, 40))
    w = shifts.plateau_weights([a, b], 40)
    assert w.log2W[10] == 2 and w.log2W[12] == 4
    w.check_tent_invariants()


def test_weight_system_exact_values():
    w = WeightSystem.from_log2(np.array([0, 1, 2, 1]))
    assert w.weight(2) == 2 and w.weight(3) == Fraction(1, 2) and w.W(3) == 2
    assert w.to_csv().splitlines()[0] == "n,w_n,log2W_n"


def test_bad_jump_is_rejected():
    with pytest.raises(ConstructionError):
        WeightSystem([1, 4, 1]).check_tent_invariants()
    with pytest.raises(ConstructionError):
        WeightSystem([1.5, 1]).check_tent_invariants()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(5, 80), st.integers(0, 4), st.integers(1, 5)), max_size=5))
def test_tent_weights_are_lipschitz(specs):
    H = 100
    tents = []
    for c, width, h in specs:
        plateau = IndexSet.interval(c, min(c + width, H), H)
        tents.append(TentSpec(plateau, h, plateau.dilate(h)))
    w = shifts.plateau_weights(tents, H)
    w.check_tent_invariants()
    for t in tents:
        assert np.all(w.log2W[t.plateau.members] >= t.height)


def _reference_log2W(tents, ns):
    out = []
    for n in ns:
        best = 0
        for t in tents:
            m = t.plateau.members
            if m.size:
                best = max(best, t.height - int(np.min(np.abs(m - n))))
        out.append(best)
    return out


def test_counterexample_matches_direct_tent_evaluation(pair):
    rng = np.random.default_rng(3)
    ns = np.concatenate([rng.integers(0, 10**6, 150), np.arange(40, 80), np.arange(440, 590)])
    for w, tents in ((pair.w, pair.tents), (pair.w_prime, pair.tents_prime)):
        assert w.log2W[ns].tolist() == _reference_log2W(tents, ns)


def test_counterexample_plateaus(pair):
    L = pair.w.log2W
    assert L[60] >= 2 and L[72] >= 2
    b1 = pair.b[0]
    assert np.all(L[np.arange(b1, 10**6, b1)] >= 1)
    assert pair.b == [12, 80, 448]


def test_counterexample_without_periods():
    pair = shifts.counterexample_pair(8, Fraction(1, 8), None, 0, 10**4)
    assert np.all(pair.w.log2W == 0) and np.all(pair.w_prime.log2W == 0)


def test_fhc_shift_on_counterexample(pair):
    rep = shifts.check_fhc_shift(pair.w, pair.E, H=10**6)
    assert rep.separation_pass and all(rep.nondecreasing.values())
    assert rep.window_minima[1][0][1] >= 2


def test_fhc_shift_flat_weights_do_not_grow():
    w = WeightSystem.constant(1, 1000)
    rep = shifts.check_fhc_shift(w, [IndexSet.progression(50, 1000, offset=50)])
    assert not rep.growth_pass


def test_fhc_shift_single_point_is_vacuous():
    w = WeightSystem.constant(1, 100)
    assert shifts.check_fhc_shift(w, [IndexSet.from_members([10], 100)]).separation_pass


def test_gp_inclusion(pair):
    prev = None
    for p in (1, 2, 3):
        g = shifts.gp_inclusion_check(pair.w, pair.w_prime, p, 10**6, pair.b, 3)
        assert g.included and g.monotone and g.tail_max <= g.bound + 1e-9
        if prev is not None:
            assert not (g.G - prev)
        prev = g.G


def test_gp_rejects_corrupted_weight(pair):
    bad = pair.w_prime.with_weight(100, 4.0)
    with pytest.raises(ConstructionError):
        shifts.gp_inclusion_check(pair.w, bad, 1, 10**5, pair.b, 3)


def test_backward_shift():
    w = WeightSystem([2, 2, 2])
    x = BlockVector([1, 1, 1, 1])
    assert shifts.apply_backward_shift(w, x).coords == (2, 2, 2, 0)
    assert shifts.apply_backward_shift(w, BlockVector.basis(0, 4)).coords == (0, 0, 0, 0)
    with pytest.raises(ParameterError):
        shifts.apply_backward_shift(w, BlockVector([1] * 5))


def test_transitivity_defect_examples(pair):
    assert not shifts.transitivity_defect(WeightSystem.constant(1, 1000), 1, burn_in=10).C
    full = shifts.transitivity_defect(WeightSystem.constant(2, 1000), 1, burn_in=10)
    assert full.profile.tail_min == 10 / 11 and not full.bounded_away
    d = shifts.transitivity_defect(pair.w, 8, 10**6)
    assert d.bounded_away
    assert d.profile.tail_max <= shifts.defect_bound(8, Fraction(1, 8), pair.b, 3)
