"""Exact coboundary solutions for finite-valued mean-zero step functions.

The base case is the rotation ``t ↦ {t − a}`` with ``g(t) = t − 1/2``.  A
two-valued function on arbitrary disjoint interval unions is packed onto an
interval, solved there by a scaled rotation, and pulled back.  A general step
function is split into mass-balanced positive/negative pairs, each solved as a
two-valued problem.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionError
from .exchange import ExchangePiece, IntervalExchange, chain, pack_sequence
from .rational import (
    AffinePiece,
    HybridFunction,
    Interval,
    IntervalSet,
    PiecewiseAffine,
    StepFunction,
    rat,
)
from .verify import BlockRecord, CoboundaryCertificate, norm_ratio


@dataclass(frozen=True)
class MassPair:
    pos_set: IntervalSet
    neg_set: IntervalSet
    pos_value: Fraction
    neg_value: Fraction

    def __post_init__(self):
        if not self.pos_value > 0 > self.neg_value:
            raise PreconditionError("pair values must be positive then negative")
        if self.pos_value * self.pos_set.measure + self.neg_value * self.neg_set.measure != 0:
            raise PreconditionError("pair is not mass balanced")
        if not self.pos_set.isdisjoint(self.neg_set):
            raise PreconditionError("pair sets overlap")

    @property
    def support(self) -> IntervalSet:
        return self.pos_set | self.neg_set


def solve_two_level(alpha, beta, A: IntervalSet, B: IntervalSet) -> tuple[IntervalExchange, PiecewiseAffine]:
    """Solve ``g∘T − g = α`` on ``A`` and ``β`` on ``B`` with ``‖g‖∞ <= max(|α|, |β|)``."""
    alpha, beta = rat(alpha), rat(beta)
    if alpha == 0:
        raise PreconditionError("alpha must be nonzero")
    if not A or not B:
        raise PreconditionError("both level sets need positive measure")
    if not A.isdisjoint(B):
        raise PreconditionError("level sets overlap")
    la, lb = A.measure, B.measure
    residual = alpha * la + beta * lb
    if residual != 0:
        raise PreconditionError(f"α·λ(A) + β·λ(B) = {residual}, not 0")
    L = la + lb
    pack = pack_sequence([A, B])
    # rotation by λ(A) on [0, L), i.e. the unit rotation by a = λ(A)/L rescaled
    rot = IntervalExchange(
        [
            ExchangePiece(Interval(la, L), Interval(0, lb)),
            ExchangePiece(Interval(0, la), Interval(lb, L)),
        ]
    )
    unpack = pack.inverse()
    T = chain(unpack, chain(rot, pack))
    c = alpha / (1 - la / L)
    # g̃(x) = c·(x/L − 1/2) on the packed interval, pulled back through the pack
    g_packed = PiecewiseAffine([AffinePiece(Interval(0, L), c / L, -c / 2)])
    g = pack.pullback(g_packed)
    return T, g


def pair_positive_negative(f: StepFunction) -> list[MassPair]:
    """Two-pointer sweep splitting ``{f ≠ 0}`` into exactly balanced pairs."""
    total = f.integrate()
    if total != 0:
        raise PreconditionError(f"function must be mean zero, integral is {total}")
    pos = [[iv.lo, iv.hi, v] for iv, v in f.value_pieces if v > 0]
    neg = [[iv.lo, iv.hi, v] for iv, v in f.value_pieces if v < 0]
    pairs = []
    i = j = 0
    while i < len(pos) and j < len(neg):
        plo, phi, pv = pos[i]
        nlo, nhi, nv = neg[j]
        pmass, nmass = pv * (phi - plo), -nv * (nhi - nlo)
        if pmass <= nmass:
            cut = nlo + pmass / -nv
            pairs.append(MassPair(IntervalSet([Interval(plo, phi)]), IntervalSet([Interval(nlo, cut)]), pv, nv))
            i += 1
            neg[j][0] = cut
            if cut == nhi:
                j += 1
        else:
            cut = plo + nmass / pv
            pairs.append(MassPair(IntervalSet([Interval(plo, cut)]), IntervalSet([Interval(nlo, nhi)]), pv, nv))
            j += 1
            pos[i][0] = cut
    return pairs


def solve_step(f: StepFunction, eps=0) -> CoboundaryCertificate:
    """Exact certificate with ``‖g‖∞ <= ‖f‖∞`` for a mean-zero step function."""
    pairs = pair_positive_negative(f)
    domain = f.domain
    covered = IntervalSet()
    T = None
    g = None
    for pair in pairs:
        Tp, gp = solve_two_level(pair.pos_value, pair.neg_value, pair.pos_set, pair.neg_set)
        T = Tp if T is None else T.glue(Tp)
        g = gp if g is None else g.glue(gp)
        covered = covered | pair.support
    rest = domain - covered
    if rest:
        ident = IntervalExchange.identity(rest)
        zero = PiecewiseAffine.constant(rest, 0)
        T = ident if T is None else T.glue(ident)
        g = zero if g is None else g.glue(zero)
    T = IntervalExchange(T.pieces, domain)
    return CoboundaryCertificate(
        f=HybridFunction.from_step(f),
        T=T,
        g=g,
        eps=rat(eps),
        exact=True,
        residual_bound=Fraction(0),
        norm_ratio=norm_ratio(g, f),
        approximant=None,
        blocks=[BlockRecord("atomic", domain, "exact", detail={"pairs": len(pairs)})],
    )
