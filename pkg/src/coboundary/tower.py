"""Partition towers and the cyclic-extension solver.

Everything happens in the packed coordinate: the base set ``K`` is translated
order-preservingly onto ``[0, L)``.  A tower is a nested sequence of
partitions of (a subset ``C`` of) ``[0, L)`` into equal-measure cells; level
``n+1`` splits every level-``n`` cell into the same number of children, and
children of cell ``j`` are the consecutive indices ``j·m … j·m + m − 1``.

In exact mode cells are intervals of equal length.  The first branching is
chosen so that every discontinuity of ``f`` is a cell boundary, later
branchings are 2.  In faithful mode every cell is first shrunk by
:func:`~coboundary.carve.split_half` (losing a little measure, keeping the
cell average) and the shrunk cell is cut into pieces lying in one half each.

The solver runs stages ``k = 0, 1, …`` on levels ``n_0 < n_1 < …``: a cyclic
cell map ``T_k`` and a step function ``g_k`` with ``g_k∘T_k − g_k = h_k``
exactly, where ``h_0 = f_{n_0}`` and ``h_k = f_{n_k} − f_{n_{k−1}}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .carve import DEFAULT_TOLERANCE, split_half
from .errors import PreconditionError, ResourceLimitError
from .exchange import ExchangePiece, IntervalExchange, canonical_pack, chain, transport
from .rational import (
    HybridFunction,
    Interval,
    IntervalSet,
    PiecewiseAffine,
    StepFunction,
    guard_denominators,
    rat,
)
from .rearrange import prefix_sums, rearrange_matrix, rearrange_zero_sum
from .verify import BlockRecord, CoboundaryCertificate, norm_ratio

MAX_CELLS = 1 << 20


def _step_on_cells(cells, values) -> StepFunction:
    return StepFunction([(iv, v) for S, v in zip(cells, values) for iv in S])


def conditional_expectation(f: PiecewiseAffine, level: "TowerLevel | list[IntervalSet]") -> StepFunction:
    """Cell averages of ``f`` as a step function on the union of the cells."""
    cells = level.cells if isinstance(level, TowerLevel) else level
    values = []
    for S in cells:
        if S.measure == 0:
            raise PreconditionError("tower cell of zero measure")  # pragma: no cover
        values.append(f.integrate(S) / S.measure)
    return _step_on_cells(cells, values)


@dataclass
class TowerLevel:
    n: int
    m_prev: int
    cells: list[IntervalSet]
    cell_measure: Fraction
    eps_n: Fraction
    values: list[Fraction]
    residual: Fraction
    oscillation: Fraction
    diameter: Fraction
    traces: list = field(default_factory=list)

    @property
    def support(self) -> IntervalSet:
        out = []
        for S in self.cells:
            out.extend(S)
        return IntervalSet(out)

    @cached_property
    def cond_exp(self) -> StepFunction:
        return _step_on_cells(self.cells, self.values)

    def index(self, j: int, radices: list[int]) -> tuple[int, ...]:
        """Mixed-radix address ``a ∈ 𝓔_n`` (1-based digits) of cell ``j``."""
        digits = []
        for m in reversed(radices):
            j, d = divmod(j, m)
            digits.append(d + 1)
        return tuple(reversed(digits))


class PartitionTower:
    """A tower grown one level at a time over ``K`` (packed onto ``[0, λ(K))``)."""

    def __init__(self, K: IntervalSet, f: PiecewiseAffine, eps=0, mode: str = "exact",
                 interface_points=(), tol=DEFAULT_TOLERANCE, max_cells: int = MAX_CELLS):
        if mode not in ("exact", "faithful"):
            raise PreconditionError(f"unknown tower mode {mode!r}")
        if not K:
            raise PreconditionError("tower base must have positive measure")
        self.base = K
        self.mode = mode
        self.eps = rat(eps)
        self.tol = rat(tol)
        self.max_cells = max_cells
        self.pack = canonical_pack(K)
        self.length = K.measure
        fK = f.restrict(K)
        if fK.domain != K:
            raise PreconditionError("f must be defined on the whole base")
        self.f_packed = self.pack.inverse().pullback(fK)
        total = self.f_packed.integrate()
        if total != 0 and (mode == "exact" or abs(total) > self.tol):
            raise PreconditionError(f"∫_K f = {total}, not 0")
        declared = [self._packed_point(rat(x)) for x in interface_points]
        self.interface_points = sorted(set(self._discontinuities()) | set(declared))
        self.norm = self.f_packed.sup_norm()
        self.levels: list[TowerLevel] = []
        self.radices: list[int] = []
        self._add_level(0, [IntervalSet([Interval(0, self.length)])], Fraction(0))

    def _packed_point(self, x: Fraction) -> Fraction:
        if not (self.base.inf <= x <= self.base.sup):
            raise PreconditionError(f"interface point {x} outside the base")
        return self.base.measure_below(x)

    def _discontinuities(self) -> list[Fraction]:
        ps = self.f_packed.pieces
        return [b.interval.lo for a, b in zip(ps, ps[1:]) if a.at_hi != b.at_lo]

    def _add_level(self, m_prev: int, cells: list[IntervalSet], eps_n: Fraction, traces=()) -> TowerLevel:
        f = self.f_packed
        values, residual, osc, diam = [], Fraction(0), Fraction(0), Fraction(0)
        for S in cells:
            avg = f.integrate(S) / S.measure
            hi, lo = f.sup(S), f.inf(S)
            values.append(avg)
            residual = max(residual, hi - avg, avg - lo)
            osc = max(osc, hi - lo)
            diam = max(diam, S.sup - S.inf)
        guard_denominators(values, "cell average")
        level = TowerLevel(len(self.levels), m_prev, cells, cells[0].measure, eps_n, values,
                           residual, osc, diam, list(traces))
        self.levels.append(level)
        if m_prev:
            self.radices.append(m_prev)
        return level

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def first_branching(self) -> int:
        m = 1
        for x in self.interface_points:
            m = math.lcm(m, (x / self.length).denominator)
        return max(m, 2)

    def extend(self) -> TowerLevel:
        prev = self.levels[-1]
        if self.mode == "exact":
            m = self.first_branching() if prev.n == 0 else 2
            self._check_size(len(prev.cells) * m)
            width = prev.cell_measure / m
            cells = [IntervalSet([Interval(S.inf + i * width, S.inf + (i + 1) * width)])
                     for S in prev.cells for i in range(m)]
            return self._add_level(m, cells, Fraction(0))
        return self._extend_faithful(prev)

    def _check_size(self, count: int) -> None:
        if count > self.max_cells:
            raise ResourceLimitError(f"tower level would have {count} cells (limit {self.max_cells})")

    def _extend_faithful(self, prev: TowerLevel) -> TowerLevel:
        n, count = prev.n, len(prev.cells)
        f = self.f_packed
        # one shrink amount for every cell keeps the cells equal in measure
        room = []
        for S in prev.cells:
            mid = (S.inf + S.sup) / 2
            left, right = S.clip(S.inf, mid).measure, S.clip(mid, S.sup).measure
            room.append(min(left, right) if left and right else S.measure)
        c = min(self.eps / (2 ** (n + 1) * count), min(room) / 2, prev.cell_measure / 2)
        if c <= 0:
            raise PreconditionError("faithful mode needs eps > 0")
        shrunk, traces = [], []
        for S, avg in zip(prev.cells, prev.values):
            h = f.restrict(S).shift(-avg)
            E, p, q, trace = split_half(S, h, c, self.tol)
            shrunk.append((S, E, Fraction(p, q)))
            traces.append(trace)
        m = 2
        for _, _, share in shrunk:
            m = math.lcm(m, share.denominator)
        self._check_size(count * m)
        cells = []
        for S, E, share in shrunk:
            mid = (S.inf + S.sup) / 2
            n_left = int(share * m)
            cells.extend(_equal_parts(E.clip(E.inf, mid), n_left))
            cells.extend(_equal_parts(E.clip(mid, E.sup), m - n_left))
        return self._add_level(m, cells, c, traces)

    def residual(self, n: int) -> Fraction:
        """``sup |f − f_n|`` on ``[0, L)`` (``sup |f|`` counts where cells were carved away)."""
        level = self.levels[n]
        outside = IntervalSet([Interval(0, self.length)]) - level.support
        out = level.residual
        if outside:
            out = max(out, self.f_packed.sup_norm(outside))
        return out

    def descendants(self, n: int, n2: int) -> int:
        """Number of level-``n2`` cells inside each level-``n`` cell."""
        return math.prod(self.radices[n:n2])

    def unpack_set(self, S: IntervalSet) -> IntervalSet:
        inv = self.pack.inverse()
        out = []
        for iv in S:
            for p, sub in inv._overlapping(iv):
                out.append(sub.translate(p.shift))
        return IntervalSet(out)


def _equal_parts(S: IntervalSet, k: int) -> list[IntervalSet]:
    if k == 0:
        return []
    step = S.measure / k
    cuts = [S.inf] + [S.point_at_measure(step * i) for i in range(1, k)] + [S.sup]
    return [S.clip(a, b) for a, b in zip(cuts, cuts[1:])]


def build_tower(K: IntervalSet, f, eps, depth_max: int, mode: str = "exact", **kw) -> PartitionTower:
    """Tower over ``K`` with ``depth_max`` levels below the root."""
    ref = f.reference() if isinstance(f, HybridFunction) else f
    tower = PartitionTower(K, ref, eps, mode, **kw)
    for _ in range(depth_max):
        tower.extend()
    return tower


@dataclass
class SolverStage:
    """One stage ``(T_k, g_k, h_k)`` in cell-index form.

    ``cycle`` lists cell indices of ``J_k`` in the order ``T_k`` visits them;
    ``g_values`` and ``h_values`` are indexed by cell.
    """

    k: int
    level: int
    cells: list[IntervalSet]
    cycle: list[int]
    g_values: list[Fraction]
    h_values: list[Fraction]
    matrix: list[list[Fraction]] | None = None
    sigma_rows: list[tuple[int, ...]] | None = None
    b: list[Fraction] | None = None
    sigma0: tuple[int, ...] = ()
    tiers: list[str] = field(default_factory=list)

    @property
    def J_k(self) -> list[IntervalSet]:
        return self.cells

    @cached_property
    def T_k(self) -> IntervalExchange:
        return cycle_exchange(self.cells, self.cycle)

    @cached_property
    def g_k(self) -> StepFunction:
        return _step_on_cells(self.cells, self.g_values)

    @cached_property
    def h_k(self) -> StepFunction:
        return _step_on_cells(self.cells, self.h_values)

    def g_norm(self) -> Fraction:
        return max((abs(v) for v in self.g_values), default=Fraction(0))

    def h_norm(self) -> Fraction:
        return max((abs(v) for v in self.h_values), default=Fraction(0))

    def successor(self) -> list[int]:
        nxt = [0] * len(self.cycle)
        for r, c in enumerate(self.cycle):
            nxt[c] = self.cycle[(r + 1) % len(self.cycle)]
        return nxt

    def is_cyclic(self) -> bool:
        return sorted(self.cycle) == list(range(len(self.cells)))

    def identity_holds(self) -> bool:
        nxt = self.successor()
        return all(self.g_values[nxt[c]] - self.g_values[c] == self.h_values[c] for c in range(len(self.cells)))


def cycle_exchange(cells: list[IntervalSet], cycle: list[int]) -> IntervalExchange:
    """The exchange sending each cell onto the next one in ``cycle`` (order-preserving)."""
    pieces = []
    for r, c in enumerate(cycle):
        d = cycle[(r + 1) % len(cycle)]
        pieces.extend(transport(cells[c], cells[d]))
    domain = IntervalSet([iv for S in cells for iv in S])
    return IntervalExchange(pieces, domain)


def base_cycle(level0_values, cells: list[IntervalSet], level: int = 0) -> SolverStage:
    """Stage 0: order the cells so the prefix sums of their values stay small."""
    values = [rat(v) for v in level0_values]
    if len(values) != len(cells):
        raise PreconditionError("one value per cell is required")
    sigma = rearrange_zero_sum(values)
    g = [Fraction(0)] * len(values)
    sums = [Fraction(0)] + prefix_sums(values, sigma)[:-1]
    for pos, c in enumerate(sigma):
        g[c] = sums[pos]
    stage = SolverStage(0, level, cells, list(sigma), g, values, sigma0=sigma)
    if not stage.identity_holds():
        raise PreconditionError("base cycle identity failed")  # pragma: no cover
    return stage


def extend_cycle(prev: SolverStage, h_next, next_level_cells: list[IntervalSet], level: int | None = None) -> SolverStage:
    """Refine ``prev`` to a cycle on the next cells solving ``g∘T − g = h_next`` there.

    ``h_next`` is a sequence of values, one per next-level cell; children of
    previous cell ``c`` are ``c·m … c·m + m − 1``.
    """
    h = [rat(v) for v in h_next]
    N = len(prev.cells)
    if len(h) % N or len(h) != len(next_level_cells):
        raise PreconditionError("next level must refine every cell uniformly")
    m = len(h) // N
    # rows follow the previous cycle; entry j of row i is the j-th child
    matrix = [[h[c * m + j] for j in range(m)] for c in prev.cycle]
    for c, row in zip(prev.cycle, matrix):
        s = sum(row, Fraction(0))
        if s:
            raise PreconditionError(f"h has integral {s * next_level_cells[0].measure} over cell {c}, not 0")
    rearr = rearrange_matrix(matrix)
    sig = rearr.perms
    b = [sum((matrix[i][sig[i][j]] for i in range(N)), Fraction(0)) for j in range(m)]
    sigma0 = rearrange_zero_sum(b)
    cycle = [prev.cycle[i] * m + sig[i][p] for p in sigma0 for i in range(N)]
    g = [Fraction(0)] * len(h)
    running = Fraction(0)
    for c in cycle:
        g[c] = running
        running += h[c]
    stage = SolverStage(prev.k + 1, prev.level + 1 if level is None else level, next_level_cells, cycle, g, h,
                        matrix, [tuple(s) for s in sig], b, sigma0, rearr.tiers)
    return stage


def refines(prev: SolverStage, nxt: SolverStage) -> bool:
    """Every next-level cell is sent into the image of its parent cell."""
    m = len(nxt.cells) // len(prev.cells)
    p_succ, n_succ = prev.successor(), nxt.successor()
    return all(n_succ[c] // m == p_succ[c // m] for c in range(len(nxt.cells)))


def stage_record(stage: SolverStage, prev: SolverStage | None, bound: Fraction) -> dict:
    g_norm, h_norm = stage.g_norm(), stage.h_norm()
    return {
        "k": stage.k,
        "level": stage.level,
        "cells": len(stage.cells),
        "g_norm": g_norm,
        "h_norm": h_norm,
        "g_bound": bound,
        "g_bound_ok": g_norm <= bound,
        "cyclic": stage.is_cyclic(),
        "refines": True if prev is None else refines(prev, stage),
        "identity": stage.identity_holds(),
        "tiers": sorted(set(stage.tiers)),
    }


@dataclass
class TowerSolution:
    """Packed-coordinate result of a tower run over one base set."""

    tower: PartitionTower
    stages: list[SolverStage]
    ledger: list[dict]
    T: IntervalExchange
    g: PiecewiseAffine
    approximant: PiecewiseAffine
    residual: Fraction
    converged: bool


def _schedule_target(tower: PartitionTower, k: int) -> Fraction:
    return tower.eps * tower.norm / 2 ** (k + 3)


def _next_level(tower: PartitionTower, after: int, target: Fraction, depth_max: int) -> int | None:
    n = after + 1
    while True:
        if n > tower.depth:
            if tower.depth >= depth_max:
                return None
            tower.extend()
        if tower.levels[n].residual <= target:
            return n
        n += 1


def run_tower(K: IntervalSet, ref: PiecewiseAffine, eps, delta, depth_max: int, mode: str = "exact",
              interface_points=(), tol=DEFAULT_TOLERANCE, max_cells: int = MAX_CELLS) -> TowerSolution:
    """Solve on ``K`` and return ``T``, ``g`` and ``f_{n_K}`` on ``K`` itself."""
    eps, delta = rat(eps), rat(delta)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    if eps < 0:
        raise PreconditionError("eps must be nonnegative")
    tower = PartitionTower(K, ref, eps, mode, interface_points, tol, max_cells)
    if depth_max < 1:
        raise PreconditionError("depth_max must be at least 1")
    tower.extend()
    stages: list[SolverStage] = []
    ledger: list[dict] = []
    n = _next_level(tower, 0, max(_schedule_target(tower, 0), Fraction(0)), depth_max)
    if n is None:
        n = tower.depth
    level = tower.levels[n]
    stage = base_cycle(level.values, level.cells, n)
    stages.append(stage)
    ledger.append(stage_record(stage, None, max(abs(v) for v in level.values)))
    while tower.levels[stage.level].residual > delta:
        n = _next_level(tower, stage.level, _schedule_target(tower, stage.k + 1), depth_max)
        if n is None:
            if stage.level == tower.depth:
                break
            n = tower.depth
        prev_level, level = tower.levels[stage.level], tower.levels[n]
        r = tower.descendants(stage.level, n)
        h = [level.values[c] - prev_level.values[c // r] for c in range(len(level.cells))]
        nxt = extend_cycle(stage, h, level.cells, n)
        ledger.append(stage_record(nxt, stage, 4 * nxt.h_norm()))
        stages.append(nxt)
        stage = nxt
    for rec in ledger:
        if not (rec["cyclic"] and rec["refines"] and rec["identity"] and rec["g_bound_ok"]):
            raise PreconditionError(f"stage {rec['k']} violates a stage condition: {rec}")  # pragma: no cover

    final = tower.levels[stage.level]
    K_level = stage.level
    # g = Σ g_k, read off on final cells through ancestors
    G = [Fraction(0)] * len(final.cells)
    for st in stages:
        r = tower.descendants(st.level, K_level)
        for c in range(len(final.cells)):
            G[c] += st.g_values[c // r]
    full = IntervalSet([Interval(0, tower.length)])
    C = final.support
    T_packed = stage.T_k
    g_packed = _step_on_cells(final.cells, G)
    approx_packed = _step_on_cells(final.cells, final.values)
    rest = full - C
    if rest:
        T_packed = T_packed.glue(IntervalExchange.identity(rest))
        g_packed = g_packed.glue(PiecewiseAffine.constant(rest, 0))
        approx_packed = approx_packed.glue(PiecewiseAffine.constant(rest, 0))
    T_packed = IntervalExchange(T_packed.pieces, full)
    pack = tower.pack
    T = IntervalExchange(chain(pack.inverse(), chain(T_packed, pack)).pieces, K)
    g = pack.pullback(g_packed)
    approx = pack.pullback(approx_packed)
    residual = tower.residual(K_level)
    for rec, st in zip(ledger, stages):
        rec["residual"] = tower.residual(st.level)
    return TowerSolution(tower, stages, ledger, T, g, approx, residual, residual <= delta)


def solve_tower(K: IntervalSet, f, eps, delta, depth_max: int, mode: str = "exact", **kw) -> CoboundaryCertificate:
    """Certificate for ``f`` on its domain; the tower runs on ``K`` and ``T`` is the identity elsewhere."""
    if not isinstance(f, HybridFunction):
        f = HybridFunction.from_step(f) if isinstance(f, StepFunction) else None
        if f is None:
            raise PreconditionError("solve_tower needs a HybridFunction or StepFunction")
    ref = f.reference()
    domain = f.domain
    if not K.issubset(domain):
        raise PreconditionError("K must lie inside the domain of f")
    sol = run_tower(K, ref, eps, delta, depth_max, mode, **kw)
    T, g, approx, residual = sol.T, sol.g, sol.approximant, sol.residual
    rest = domain - K
    if rest:
        T = T.glue(IntervalExchange.identity(rest))
        g = g.glue(PiecewiseAffine.constant(rest, 0))
        approx = approx.glue(PiecewiseAffine.constant(rest, 0))
        residual = max(residual, ref.sup_norm(rest))
    T = IntervalExchange(T.pieces, domain)
    converged = residual <= rat(delta)
    block = BlockRecord("tower", K, "tower", residual, Fraction(0), converged,
                        {"levels": sol.tower.depth, "final_level": sol.stages[-1].level,
                         "cells": len(sol.stages[-1].cells), "mode": mode})
    return CoboundaryCertificate(
        f=f, T=T, g=g, eps=rat(eps),
        exact=residual == 0 and f.sampled_part is None,
        residual_bound=residual,
        norm_ratio=norm_ratio(g, ref),
        approximant=approx,
        modulus_bound=f.modulus_bound(),
        converged=converged,
        blocks=[block],
        stage_ledger=sol.ledger,
    )
