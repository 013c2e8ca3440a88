import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from coboundary.errors import PreconditionError
from coboundary.rearrange import is_permutation, prefix_sums, rearrange_matrix, rearrange_zero_sum


def _max_abs(a):
    return max((abs(x) for x in a), default=F(0))


def _brute_ok(a):
    """Every permutation whose prefix sums stay within max|a|."""
    bound = _max_abs(a)
    return {p for p in itertools.permutations(range(len(a))) if all(abs(s) <= bound for s in prefix_sums(a, p))}


@pytest.mark.parametrize(
    "a, sums",
    [
        ((1, -1), (1, 0)),
        ((2, -1, -1), (2, 1, 0)),
        ((-3, 1, 1, 1), (-3, -2, -1, 0)),
    ],
)
def test_vector_examples(a, sums):
    a = [F(x) for x in a]
    perm = rearrange_zero_sum(a)
    assert perm == tuple(range(len(a)))
    assert tuple(prefix_sums(a, perm)) == tuple(F(s) for s in sums)
    assert perm in _brute_ok(a)


def test_vector_rejects_nonzero_sum():
    with pytest.raises(PreconditionError):
        rearrange_zero_sum([1, 1])


zero_sum_vectors = st.lists(st.fractions(-5, 5, max_denominator=7), min_size=1, max_size=7).map(
    lambda xs: xs + [-sum(xs, F(0))]
)


@given(zero_sum_vectors)
def test_vector_bound_property(a):
    perm = rearrange_zero_sum(a)
    assert is_permutation(perm, len(a))
    assert all(abs(s) <= _max_abs(a) for s in prefix_sums(a, perm))


def _columns(A, perms):
    m = len(A[0])
    S = [F(0)] * m
    out = []
    for row, p in zip(A, perms):
        S = [S[j] + row[p[j]] for j in range(m)]
        out.append(S)
    return out


def test_matrix_identity_example():
    A = [[F(1), F(-1)], [F(-1), F(1)]]
    res = rearrange_matrix(A)
    assert [tuple(p) for p in res.perms] == [(0, 1), (0, 1)]
    assert res.column_partials(A) == [[1, -1], [0, 0]]


def test_matrix_transposition_example():
    A = [[F(1), F(-1)], [F(1), F(-1)]]
    res = rearrange_matrix(A)
    assert [tuple(p) for p in res.perms] == [(0, 1), (1, 0)]
    assert res.column_partials(A) == [[1, -1], [0, 0]]
    # brute force: every feasible choice for row 2 swaps the entries
    feasible = [q for q in itertools.permutations(range(2))
                if all(abs(s) <= 2 for S in _columns(A, [(0, 1), q]) for s in S)]
    assert (1, 0) in feasible


def test_single_row_matrix():
    A = [[F(2), F(-1), F(-1)]]
    res = rearrange_matrix(A)
    assert all(abs(s) <= 2 * res.bound for s in res.column_partials(A)[0])


def test_matrix_rejects_bad_rows():
    with pytest.raises(PreconditionError):
        rearrange_matrix([[1, 1]])
    with pytest.raises(PreconditionError):
        rearrange_matrix([[1, -1], [1, -1, 0]])


@st.composite
def zero_row_matrices(draw, max_n=5, max_m=5):
    n, m = draw(st.integers(1, max_n)), draw(st.integers(1, max_m))
    rows = []
    for _ in range(n):
        r = draw(st.lists(st.fractions(-4, 4, max_denominator=5), min_size=m - 1, max_size=m - 1))
        rows.append(r + [-sum(r, F(0))])
    return rows


@settings(max_examples=60)
@given(zero_row_matrices())
def test_matrix_bound_property(A):
    res = rearrange_matrix(A)
    C = res.bound
    for S in res.column_partials(A):
        assert all(abs(s) <= 2 * C for s in S)
