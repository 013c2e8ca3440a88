import itertools
from fractions import Fraction as F

import pytest

from coboundary.errors import PreconditionError, ResourceLimitError
from coboundary.exchange import rotation, verify_measure_preserving
from coboundary.rational import HybridFunction, Interval, IntervalSet, PiecewiseAffine
from coboundary.tower import (
    PartitionTower,
    base_cycle,
    build_tower,
    conditional_expectation,
    extend_cycle,
    refines,
    run_tower,
    solve_tower,
)
from coboundary.verify import orbit, verify_certificate

from conftest import hybrid_affine, step

U = IntervalSet.unit()
LINEAR = PiecewiseAffine.affine(U, 1, F(-1, 2))


def halves(width=F(1, 2), count=2):
    return [IntervalSet.of((i * width, (i + 1) * width)) for i in range(count)]


def test_conditional_expectation_examples():
    assert conditional_expectation(LINEAR, halves()).values() == [F(-1, 4), F(1, 4)]
    const = step((0, 1, "3/5"))
    assert conditional_expectation(const, halves(F(1, 4), 4)) == const
    f = step((0, "1/4", 1), ("1/4", 1, "-1/3"))
    assert conditional_expectation(f, halves(F(1, 4), 4)) == f


def test_dyadic_tower_oscillation():
    tower = build_tower(U, LINEAR, 0, 5)
    for lvl in tower.levels:
        assert len(lvl.cells) == 2 ** lvl.n
        assert lvl.oscillation == F(1, 2 ** lvl.n)
        assert lvl.residual == F(1, 2 ** (lvl.n + 1))
        assert conditional_expectation(LINEAR, lvl).integrate() == 0


def test_tower_invariants_exact_mode():
    f = step((0, "1/3", "1/4"), ("1/3", 1, "-1/8"))
    tower = build_tower(U, f, 0, 4)
    assert tower.levels[1].m_prev == 3
    assert F(1, 3) in {S.inf for S in tower.levels[1].cells}
    for a, b in zip(tower.levels, tower.levels[1:]):
        m = b.m_prev
        assert all(S.measure == b.cell_measure for S in b.cells)
        for j, S in enumerate(b.cells):
            assert S.issubset(a.cells[j // m])
        assert b.diameter <= a.diameter / 2 or a.n == 0
        assert sum((v * b.cell_measure for v in b.values), F(0)) == 0
    assert tower.residual(1) == 0


def test_constant_tower_has_zero_oscillation():
    tower = build_tower(U, step((0, 1, 0)), 0, 3)
    assert all(l.oscillation == 0 for l in tower.levels)


def test_tower_cell_limit():
    with pytest.raises(ResourceLimitError):
        build_tower(U, LINEAR, 0, 6, max_cells=16)


def test_tower_rejects_nonzero_mean():
    with pytest.raises(PreconditionError):
        PartitionTower(U, step((0, 1, 1)))


def test_level_addresses():
    tower = build_tower(U, step((0, "1/3", "1/4"), ("1/3", 1, "-1/8")), 0, 2)
    lvl = tower.levels[2]
    addrs = [lvl.index(j, tower.radices) for j in range(len(lvl.cells))]
    assert addrs == list(itertools.product(range(1, 4), range(1, 3)))


def test_base_cycle_two_cells():
    st = base_cycle([F(-1, 4), F(1, 4)], halves())
    assert st.T_k == rotation(F(1, 2))
    assert st.g_values == [0, F(-1, 4)]
    nxt = st.successor()
    assert [st.g_values[nxt[c]] - st.g_values[c] for c in range(2)] == [F(-1, 4), F(1, 4)]


def test_base_cycle_zero_and_three():
    st = base_cycle([0, 0, 0], halves(F(1, 3), 3))
    assert st.is_cyclic() and st.g_norm() == 0
    st = base_cycle([2, -1, -1], halves(F(1, 3), 3))
    assert st.cycle == [0, 1, 2] and st.g_values == [0, 2, 1]
    assert st.g_norm() <= 2


def test_base_cycle_rejects_nonzero_sum():
    with pytest.raises(PreconditionError):
        base_cycle([1, 1], halves())


def test_extend_cycle_zero_increment():
    st = base_cycle([F(-1, 4), F(1, 4)], halves())
    nxt = extend_cycle(st, [0, 0, 0, 0], halves(F(1, 4), 4))
    assert nxt.g_norm() == 0 and nxt.is_cyclic() and refines(st, nxt)


def test_extend_cycle_four_cells():
    st = base_cycle([0, 0], halves())
    h = [1, -1, -1, 1]
    nxt = extend_cycle(st, h, halves(F(1, 4), 4))
    assert nxt.is_cyclic() and refines(st, nxt) and nxt.identity_holds()
    assert nxt.g_norm() <= 4
    # hand trace: rows (1,-1) and (-1,1) keep identity order, columns scanned in order
    assert nxt.sigma_rows == [(0, 1), (0, 1)]
    assert nxt.cycle == [0, 2, 1, 3]
    assert nxt.g_values == [0, 0, 1, -1]
    T = nxt.T_k
    assert verify_measure_preserving(T).ok
    pts, _ = orbit(T, F(0), 4)
    assert pts[4] == 0 and len({p // F(1, 4) for p in pts[:4]}) == 4


def test_extend_cycle_dyadic_first_step():
    tower = build_tower(U, LINEAR, 0, 2)
    l1, l2 = tower.levels[1], tower.levels[2]
    st = base_cycle(l1.values, l1.cells, 1)
    h = [l2.values[c] - l1.values[c // 2] for c in range(4)]
    assert h == [F(-1, 8), F(1, 8), F(-1, 8), F(1, 8)]
    nxt = extend_cycle(st, h, l2.cells, 2)
    assert nxt.is_cyclic() and nxt.identity_holds() and refines(st, nxt)
    G = [st.g_values[c // 2] + nxt.g_values[c] for c in range(4)]
    T = nxt.T_k
    for c, S in enumerate(l2.cells):
        x = S.inf
        d = T(x) // F(1, 4)
        assert G[int(d)] - G[c] == l2.values[c]


def test_extend_cycle_rejects_unbalanced_rows():
    st = base_cycle([0, 0], halves())
    with pytest.raises(PreconditionError):
        extend_cycle(st, [1, 0, 0, -1], halves(F(1, 4), 4))


def test_solve_tower_linear_schedule():
    f = hybrid_affine(1, F(-1, 2), steps=2 ** 10)
    cert = solve_tower(U, f, F(1, 10), F(1, 1000), 16)
    levels = [rec["level"] for rec in cert.stage_ledger]
    assert levels == [7, 8, 9]
    assert cert.residual_bound == F(1, 1024)
    assert cert.converged
    assert cert.g.sup_norm() <= F(11, 20)
    for rec in cert.stage_ledger:
        assert rec["cyclic"] and rec["refines"] and rec["identity"] and rec["g_bound_ok"]
    assert verify_certificate(cert, "numeric", F(1, 10**9)).passed


def test_solve_tower_zero_function():
    cert = solve_tower(U, step((0, 1, 0)), F(1, 10), F(1, 1000), 4)
    assert cert.residual_bound == 0 and cert.g.sup_norm() == 0
    assert verify_certificate(cert).passed


def test_solve_tower_with_top_atom():
    f = step((0, "1/3", "1/4"), ("1/3", 1, "-1/8"))
    cert = solve_tower(U, f, F(1, 10), F(1, 1000), 5)
    assert cert.residual_bound == 0 and verify_certificate(cert).passed


def test_solve_tower_reports_non_convergence():
    f = hybrid_affine(1, F(-1, 2), steps=2 ** 6)
    cert = solve_tower(U, f, F(1, 10), F(1, 1000), 4)
    assert not cert.converged
    assert cert.residual_bound == F(1, 32)
    assert verify_certificate(cert).passed


def test_solve_tower_on_subset_keeps_identity_elsewhere():
    f = step((0, "1/4", 1), ("1/4", "1/2", -1), ("1/2", 1, 0))
    K = IntervalSet.of((0, F(1, 2)))
    cert = solve_tower(K, f, F(1, 10), F(1, 1000), 4)
    assert cert.T(F(3, 4)) == F(3, 4)
    assert verify_certificate(cert).passed


def test_faithful_tower_shrinks_and_halves():
    f = hybrid_affine(1, F(-1, 2), steps=16).reference()
    tower = build_tower(U, f, F(1, 10), 3, mode="faithful")
    for a, b in zip(tower.levels, tower.levels[1:]):
        m = b.m_prev
        assert all(S.measure == b.cell_measure for S in b.cells)
        for j, S in enumerate(b.cells):
            parent = a.cells[j // m]
            assert S.issubset(parent)
            assert S.sup - S.inf <= (parent.sup - parent.inf) / 2
        assert 0 < b.eps_n < a.cell_measure
        assert sum((v * b.cell_measure for v in b.values), F(0)) == 0
    lost = 1 - tower.levels[-1].support.measure
    assert 0 < lost <= F(1, 10)


def test_faithful_solve_verifies():
    f = hybrid_affine(1, F(-1, 2), steps=16)
    cert = solve_tower(U, f, F(1, 10), F(1, 100), 3, mode="faithful")
    assert verify_certificate(cert).passed
