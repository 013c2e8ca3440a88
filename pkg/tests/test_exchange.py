from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from coboundary.errors import DomainMismatchError, PreconditionError, UndefinedPointError
from coboundary.exchange import (
    ExchangePiece,
    IntervalExchange,
    apply,
    canonical_pack,
    compose,
    invert,
    map_set,
    rotation,
    transport,
    verify_measure_preserving,
)
from coboundary.rational import Interval, IntervalSet, PiecewiseAffine

from conftest import interval_sets

third = F(1, 3)


def test_rotation_pieces():
    T = rotation(third)
    assert T.pieces == (
        ExchangePiece(Interval(0, third), Interval(F(2, 3), 1)),
        ExchangePiece(Interval(third, 1), Interval(0, F(2, 3))),
    )
    assert rotation(0) == IntervalExchange.identity(IntervalSet.unit())


def test_rotation_half_is_involution():
    T = rotation(F(1, 2))
    assert compose(T, T) == IntervalExchange.identity(IntervalSet.unit())


def test_rotation_rejects_out_of_range():
    with pytest.raises(PreconditionError):
        rotation(F(3, 2))


def test_canonical_pack_examples():
    S = IntervalSet.of((0, F(1, 4)), (F(1, 2), F(3, 4)))
    P = canonical_pack(S)
    assert set(P.pieces) == {
        ExchangePiece(Interval(0, F(1, 4)), Interval(0, F(1, 4))),
        ExchangePiece(Interval(F(1, 2), F(3, 4)), Interval(F(1, 4), F(1, 2))),
    }
    assert canonical_pack(IntervalSet.unit()) == IntervalExchange.identity(IntervalSet.unit())
    half = canonical_pack(IntervalSet.of((F(1, 2), 1)))
    assert [p.shift for p in half.pieces] == [F(-1, 2)]
    assert apply(half, F(3, 4)) == F(1, 4)


def test_apply_examples():
    assert apply(rotation(third), 0) == F(2, 3)
    ident = IntervalExchange.identity(IntervalSet.unit())
    assert apply(ident, F(5, 7)) == F(5, 7)
    with pytest.raises(UndefinedPointError):
        apply(rotation(third), 1)


def test_invert_examples():
    assert invert(rotation(third)) == rotation(F(2, 3))
    ident = IntervalExchange.identity(IntervalSet.unit())
    assert invert(ident) == ident
    T = rotation(F(2, 7))
    assert invert(invert(T)) == T


def test_compose_examples():
    assert compose(rotation(third), rotation(third)) == rotation(F(2, 3))
    T = rotation(F(3, 8))
    ident = IntervalExchange.identity(IntervalSet.unit())
    assert compose(T, invert(T)) == ident
    assert compose(ident, T) == T


def test_compose_requires_shared_domain():
    with pytest.raises(DomainMismatchError):
        compose(rotation(third), IntervalExchange.identity(IntervalSet.of((0, F(1, 2)))))


def test_map_set_examples():
    assert map_set(rotation(third), IntervalSet.of((0, third))) == IntervalSet.of((F(2, 3), 1))
    S = IntervalSet.of((F(1, 8), F(3, 8)))
    assert map_set(IntervalExchange.identity(IntervalSet.unit()), S) == S
    quarter_pieces = IntervalSet.of((0, F(1, 4)), (F(1, 2), F(3, 4)))
    assert map_set(rotation(F(1, 2)), quarter_pieces) == quarter_pieces


def test_verify_measure_preserving_negative():
    bad = IntervalExchange(
        [ExchangePiece(Interval(0, F(1, 2)), Interval(0, F(1, 2))),
         ExchangePiece(Interval(F(1, 2), 1), Interval(F(1, 4), F(3, 4)))],
        IntervalSet.unit(),
    )
    report = verify_measure_preserving(bad)
    assert not report.ok
    assert any("overlapping targets" in s for s in report.issues)
    assert verify_measure_preserving(rotation(F(2, 9))).ok


def test_pullback_is_composition():
    g = PiecewiseAffine.affine(IntervalSet.unit(), 1, F(-1, 2))
    T = rotation(third)
    gT = T.pullback(g)
    for x in (F(0), F(1, 5), F(1, 2), F(9, 10)):
        assert gT(x) == g(T(x))


@given(interval_sets(), st.fractions(0, 1, max_denominator=13))
def test_transport_preserves_measure(S, a):
    if not S:
        return
    P = canonical_pack(S)
    back = IntervalExchange(transport(IntervalSet.of((0, S.measure)), S), IntervalSet.of((0, S.measure)))
    assert map_set(P, S) == IntervalSet.of((0, S.measure))
    assert map_set(back, IntervalSet.of((0, S.measure))) == S


@given(st.fractions(0, 1, max_denominator=30), st.fractions(0, 1, max_denominator=30))
def test_rotations_commute_and_preserve_measure(a, b):
    Ta, Tb = rotation(a), rotation(b)
    assert compose(Ta, Tb) == compose(Tb, Ta)
    assert verify_measure_preserving(compose(Ta, Tb)).ok
