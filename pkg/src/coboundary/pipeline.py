"""Whole-domain assembly: split ``f`` into mean-zero blocks, solve each, glue.

The domain is partitioned into

* ``C_block``: part of the atomic region (where ``f`` is a step function),
  solved exactly;
* ``B0``: an atom-free block inside the sampled region, solved by the tower;
* mixed blocks ``A_i ∪ B_i``: the atom ``{f = y_i}`` left over in the atomic
  region together with a slice of the negative sampled region that cancels
  it, solved by the tower with the atom on top.

The sign is normalized first so that the atomic region has nonnegative
integral; ``f`` and ``−f`` therefore produce the same blocks and the same
``T``, with ``g`` negated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CoboundaryError, PreconditionError
from .exact_solver import solve_step
from .exchange import IntervalExchange
from .rational import HybridFunction, IntervalSet, PiecewiseAffine, StepFunction, rat
from .roots import leftmost_root
from .tower import DEFAULT_TOLERANCE, MAX_CELLS, run_tower
from .verify import BlockRecord, CoboundaryCertificate, norm_ratio


@dataclass
class Block:
    A: IntervalSet
    B: IntervalSet
    y: Fraction
    r_interval: tuple[Fraction, Fraction]

    @property
    def support(self) -> IntervalSet:
        return self.A | self.B


@dataclass
class DomainDecomposition:
    D: IntervalSet
    D_plus: IntervalSet
    D_minus: IntervalSet
    R_C: Fraction
    C_block: IntervalSet
    C1: IntervalSet
    C2: IntervalSet
    C2_plus: IntervalSet
    C2_minus: IntervalSet
    B0: IntervalSet
    R_B0: Fraction
    C2_tilde: IntervalSet
    blocks: list[Block]
    sign: int
    mean_shift: Fraction
    h: PiecewiseAffine = field(repr=False)
    root_residuals: dict = field(default_factory=dict)

    def parts(self) -> list[tuple[str, IntervalSet]]:
        """Nonempty blocks as ``(label, set)`` pairs in solve order."""
        out = []
        if self.C_block:
            out.append(("C", self.C_block))
        if self.B0:
            out.append(("B0", self.B0))
        for i, b in enumerate(self.blocks, 1):
            out.append((f"E{i}", b.support))
        return out

    def total_measure(self) -> Fraction:
        return sum((S.measure for _, S in self.parts()), Fraction(0))


def _sign_of(f: HybridFunction, ref: PiecewiseAffine, D: IntervalSet) -> int:
    # the atomic region gets nonnegative integral; a tie keeps f as given
    return -1 if D and ref.integrate(D) < 0 else 1


def decompose_domain(f: HybridFunction, tol=DEFAULT_TOLERANCE) -> DomainDecomposition:
    """Partition the domain into mean-zero blocks as described in the module docstring."""
    tol = rat(tol)
    ref = f.reference()
    domain = f.domain
    total = ref.integrate()
    S_region = f.sampled_region
    mean_shift = Fraction(0)
    if total != 0:
        if not S_region:
            raise PreconditionError(f"f must be mean zero, integral is {total}")
        mean_shift = total / S_region.measure
        correction = PiecewiseAffine.constant(S_region, mean_shift)
        if domain - S_region:
            correction = correction.glue(PiecewiseAffine.constant(domain - S_region, 0))
        ref = ref - correction
    D = domain - S_region
    sign = _sign_of(f, ref, D)
    h = ref.scale(sign)
    residuals = {}

    hD = h.restrict(D)
    D_plus = hD.where(">", 0) if D else IntervalSet()
    D_minus = D - D_plus
    lo = domain.inf
    if not D:
        R_C, C_block = lo, IntervalSet()
    elif hD.integrate() == 0:
        R_C, C_block = domain.sup, D
    else:
        neg = h.integrate(D_minus) if D_minus else Fraction(0)

        def F(r):
            return neg + h.integrate(D_plus.clip(lo, r))

        root = leftmost_root(F, lo, domain.sup, D_plus.boundary(), 1)
        R_C = root.x
        C_block = D_plus.clip(lo, R_C) | D_minus
    C1 = D - C_block
    C2 = S_region
    hC2 = h.restrict(C2)
    C2_plus = hC2.where(">=", 0) if C2 else IntervalSet()
    C2_minus = C2 - C2_plus
    if not C2:
        R_B0, B0 = lo, IntervalSet()
    else:
        pos = h.integrate(C2_plus) if C2_plus else Fraction(0)

        def G(r):
            return pos + h.integrate(C2_minus.clip(lo, r))

        breaks = set(C2_minus.boundary()) | set(h.breakpoints())
        if G(domain.sup) >= 0:
            # nothing is left for mixed blocks
            R_B0 = domain.sup
        else:
            root = leftmost_root(G, lo, domain.sup, breaks, 2, tol)
            R_B0 = root.x
            residuals["R_B0"] = root.residual
        B0 = C2_plus | C2_minus.clip(lo, R_B0)
    C2_tilde = C2 - B0

    blocks = []
    if C1:
        levels = {}
        for piece in h.restrict(C1).pieces:
            levels.setdefault(piece.intercept, []).append(piece.interval)
        order = sorted(levels, key=lambda y: min(iv.lo for iv in levels[y]))
        if not C2_tilde:
            raise PreconditionError("positive atoms remain but no negative sampled mass to cancel them")
        r_prev = C2_tilde.inf
        for i, y in enumerate(order):
            A = IntervalSet(levels[y])
            mass = h.integrate(A)
            if i == len(order) - 1:
                r = C2_tilde.sup
            else:
                def H(r, r_prev=r_prev, mass=mass):
                    return mass + h.integrate(C2_tilde.clip(r_prev, r))

                breaks = set(C2_tilde.boundary()) | set(h.breakpoints())
                root = leftmost_root(H, r_prev, C2_tilde.sup, breaks, 2, tol)
                r = root.x
                residuals[f"r{i + 1}"] = root.residual
            blocks.append(Block(A, C2_tilde.clip(r_prev, r), rat(y), (r_prev, r)))
            r_prev = r
    dec = DomainDecomposition(D, D_plus, D_minus, R_C, C_block, C1, C2, C2_plus, C2_minus, B0, R_B0,
                              C2_tilde, blocks, sign, mean_shift, h, residuals)
    if dec.total_measure() != domain.measure:
        raise PreconditionError("blocks do not partition the domain")  # pragma: no cover
    return dec


def _tagged(label: str, exc: Exception) -> Exception:
    try:
        out = type(exc)(f"block {label}: {exc}")
    except TypeError:  # pragma: no cover
        out = CoboundaryError(f"block {label}: {exc}")
    return out


def solve_full(f: HybridFunction, eps, delta, depth_max: int = 16, mode: str = "exact",
               tol=DEFAULT_TOLERANCE, max_cells: int = MAX_CELLS) -> CoboundaryCertificate:
    """Certificate for the whole domain of ``f`` with ``‖g‖∞ <= (1+ε)‖f‖∞`` and residual at most ``δ``."""
    eps, delta, tol = rat(eps), rat(delta), rat(tol)
    if isinstance(f, StepFunction):
        f = HybridFunction.from_step(f)
    if f.sampled_part is None:
        return solve_step(f.step_part, eps)
    dec = decompose_domain(f, tol)
    h, sign = dec.h, dec.sign
    pieces_T, pieces_g, pieces_a = [], [], []
    records, ledger = [], []
    worst = Fraction(0)
    converged = True
    for label, S in dec.parts():
        try:
            if label == "C":
                step = h.restrict(S)
                sub = solve_step(step if isinstance(step, StepFunction) else StepFunction(
                    [(p.interval, p.intercept) for p in step.pieces]))
                T, g, approx = sub.T, sub.g, step
                records.append(BlockRecord("atomic", S, "exact", detail={"R_C": dec.R_C}))
                block_residual = Fraction(0)
            else:
                shift = h.integrate(S) / S.measure
                budget = delta - abs(dec.mean_shift) - abs(shift)
                if budget <= 0:
                    raise PreconditionError(f"mean correction {abs(shift) + abs(dec.mean_shift)} exceeds delta")
                sol = run_tower(S, h.shift(-shift), eps, budget, depth_max, mode, tol=tol, max_cells=max_cells)
                T, g, approx = sol.T, sol.g, sol.approximant
                block_residual = sol.residual + abs(shift)
                kind = "atom-free" if label == "B0" else "mixed"
                detail = {"final_level": sol.stages[-1].level, "cells": len(sol.stages[-1].cells)}
                if label != "B0":
                    blk = dec.blocks[int(label[1:]) - 1]
                    detail.update(y=blk.y, r_interval=blk.r_interval)
                records.append(BlockRecord(kind, S, "tower", block_residual, shift, sol.converged, detail))
                converged = converged and sol.converged
                ledger.extend(dict(rec, block=label) for rec in sol.ledger)
        except CoboundaryError as exc:
            raise _tagged(label, exc) from exc
        except ValueError as exc:
            raise _tagged(label, exc) from exc
        worst = max(worst, block_residual)
        pieces_T.append(T)
        pieces_g.append(g.scale(sign))
        pieces_a.append(approx.scale(sign))
    T, g, approx = pieces_T[0], pieces_g[0], pieces_a[0]
    for t, gg, a in zip(pieces_T[1:], pieces_g[1:], pieces_a[1:]):
        T, g, approx = T.glue(t), g.glue(gg), approx.glue(a)
    rest = f.domain - T.domain
    if rest:  # pragma: no cover - blocks tile the domain exactly
        T = T.glue(IntervalExchange.identity(rest))
        g = g.glue(PiecewiseAffine.constant(rest, 0))
        approx = approx.glue(PiecewiseAffine.constant(rest, 0))
    T = IntervalExchange(T.pieces, f.domain)
    residual = worst + abs(dec.mean_shift)
    ref = f.reference()
    return CoboundaryCertificate(
        f=f, T=T, g=g, eps=eps,
        exact=residual == 0 and all(r.solver == "exact" for r in records),
        residual_bound=residual,
        norm_ratio=norm_ratio(g, ref),
        approximant=approx,
        modulus_bound=f.modulus_bound(),
        converged=converged and residual <= delta,
        blocks=records,
        stage_ledger=ledger,
    )
