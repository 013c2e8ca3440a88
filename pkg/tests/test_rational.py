from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from coboundary.errors import DomainMismatchError, PreconditionError
from coboundary.rational import (
    HybridFunction,
    Interval,
    IntervalSet,
    PiecewiseAffine,
    SampledFunction,
    atoms,
    common_refinement,
    guard_denominators,
    integrate,
    rat,
    sup_norm,
)

from conftest import interval_sets, mean_zero_steps, step


def test_rat_rejects_floats():
    with pytest.raises(PreconditionError):
        rat(0.5)
    assert rat("3/6") == F(1, 2)


def test_interval_set_canonical_merge():
    S = IntervalSet.of((0, F(1, 4)), (F(1, 4), F(1, 2)), (F(3, 4), 1))
    assert list(S) == [Interval(0, F(1, 2)), Interval(F(3, 4), 1)]
    assert S.measure == F(3, 4)


def test_interval_set_algebra():
    A = IntervalSet.of((0, F(1, 2)))
    B = IntervalSet.of((F(1, 4), F(3, 4)))
    assert A | B == IntervalSet.of((0, F(3, 4)))
    assert A & B == IntervalSet.of((F(1, 4), F(1, 2)))
    assert A - B == IntervalSet.of((0, F(1, 4)))
    assert (A - A).measure == 0


@given(interval_sets(), interval_sets())
def test_interval_set_inclusion_exclusion(A, B):
    assert (A | B).measure + (A & B).measure == A.measure + B.measure
    assert (A - B).measure == A.measure - (A & B).measure
    assert (A - B).isdisjoint(B)


@given(interval_sets())
def test_point_at_measure_inverts_measure_below(S):
    if not S:
        return
    for k in range(5):
        m = S.measure * k / 4
        x = S.point_at_measure(m)
        assert S.measure_below(x) == m


def test_integrate_examples():
    f = step((0, "1/3", "2/3"), ("1/3", 1, "-1/3"))
    assert integrate(f, IntervalSet.unit()) == 0
    assert integrate(f, IntervalSet()) == 0
    g = step((0, "1/2", 1), ("1/2", 1, 0))
    assert integrate(g, IntervalSet.of((F(1, 4), F(3, 4)))) == F(1, 4)


def test_integrate_outside_domain_raises():
    f = step((0, "1/2", 1))
    with pytest.raises(DomainMismatchError):
        f.integrate(IntervalSet.of((0, 1)))


def test_sup_norm_examples():
    assert sup_norm(step((0, "1/3", "2/3"), ("1/3", 1, "-1/3"))) == F(2, 3)
    assert sup_norm(PiecewiseAffine.affine(IntervalSet.unit(), 1, F(-1, 2))) == F(1, 2)
    assert sup_norm(step((0, 1, 0))) == 0


def test_common_refinement_examples():
    assert common_refinement([[0, F(1, 3), 1], [0, F(1, 2), 1]]) == [0, F(1, 3), F(1, 2), 1]
    assert common_refinement([[0, F(1, 2), 1]]) == [0, F(1, 2), 1]
    assert common_refinement([[0, 1], [0, 1]]) == [0, 1]


def test_atoms_examples():
    f = step((0, "1/4", "3/4"), ("1/4", 1, "-1/4"))
    assert atoms(f) == {F(3, 4): IntervalSet.of((0, F(1, 4))), F(-1, 4): IntervalSet.of((F(1, 4), 1))}
    assert atoms(step((0, 1, 0))) == {F(0): IntervalSet.unit()}
    g = step((0, "1/4", 1), ("1/4", "1/2", 0), ("1/2", "3/4", 1), ("3/4", 1, 0))
    assert atoms(g)[F(1)] == IntervalSet.of((0, F(1, 4)), (F(1, 2), F(3, 4)))


def test_step_function_merges_equal_neighbours():
    f = step((0, "1/2", 1), ("1/2", 1, 1))
    assert len(f.pieces) == 1


def test_affine_algebra_and_level_sets():
    f = PiecewiseAffine.affine(IntervalSet.unit(), 1, F(-1, 2))
    assert f.where(">", 0) == IntervalSet.of((F(1, 2), 1))
    assert f.where("<=", F(-1, 4)) == IntervalSet.of((0, F(1, 4)))
    assert (f - f).sup_norm() == 0
    assert f.integrate(IntervalSet.of((0, F(1, 2)))) == F(-1, 8)
    assert f.oscillation() == 1


@given(mean_zero_steps())
def test_random_steps_are_mean_zero(f):
    assert f.integrate() == 0
    assert f.domain == IntervalSet.unit()


def test_sampled_interpolant_and_hybrid_reference():
    sp = SampledFunction.from_callable(lambda t: t * t, 0, 1, 4, 2)
    interp = sp.interpolant()
    assert interp(F(1, 8)) == F(1, 32)  # chord between 0 and 1/16
    assert sp.oscillation_bound() == F(1, 2)
    h = HybridFunction(step((0, 1, 1)), SampledFunction((F(1, 2), F(1)), (F(0), F(1)), 2))
    ref = h.reference()
    assert ref(F(1, 4)) == 1 and ref(F(3, 4)) == F(3, 2)
    assert [x for x, _ in h.grid_values()] == [F(1, 2)]


def test_sampled_rejects_bad_grid():
    with pytest.raises(PreconditionError):
        SampledFunction((F(0), F(0)), (F(0), F(1)))


def test_denominator_guard(monkeypatch):
    monkeypatch.setenv("COBOUNDARY_MAX_DENOMINATOR_BITS", "4")
    guard_denominators([F(1, 15)])
    from coboundary.errors import ResourceLimitError
    with pytest.raises(ResourceLimitError):
        guard_denominators([F(1, 17)])


@given(st.fractions(0, 1, max_denominator=50), st.fractions(0, 1, max_denominator=50))
def test_clip_measure(a, b):
    S = IntervalSet.unit()
    lo, hi = min(a, b), max(a, b)
    assert S.clip(lo, hi).measure == hi - lo


def test_where_on_pieces_entirely_beyond_the_level():
    f = PiecewiseAffine.affine(IntervalSet.of((0, F(1, 10)), (F(1, 2), 1)), 1, F(-1, 2))
    assert f.where(">", F(1, 4)) == IntervalSet.of((F(3, 4), 1))
    assert f.where("<", F(-1, 4)) == IntervalSet.of((0, F(1, 10)))
