"""Interval exchange transformations: exact piecewise translations.

Every transformation built in this package is an :class:`IntervalExchange`.
Measure preservation is then a syntactic property (equal source and target
lengths, sources and targets each tiling the domain), checked exactly by
:func:`verify_measure_preserving`.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainMismatchError, PreconditionError, UndefinedPointError
from .rational import Interval, IntervalSet, PiecewiseAffine, AffinePiece, rat


@dataclass(frozen=True, order=True)
class ExchangePiece:
    source: Interval
    target: Interval

    @property
    def shift(self) -> Fraction:
        return self.target.lo - self.source.lo

    def __repr__(self):
        return f"{self.source}→{self.target}"


class IntervalExchange:
    """A finite list of translations ``source → target``.

    Construction canonicalizes (sorts by source, merges adjacent pieces with
    equal shift) but does not validate; use :func:`verify_measure_preserving`
    or :meth:`validate`.
    """

    __slots__ = ("pieces", "_los", "_domain")

    def __init__(self, pieces: Iterable, domain: IntervalSet | None = None):
        ps = []
        for p in pieces:
            if not isinstance(p, ExchangePiece):
                p = ExchangePiece(*p)
            if not p.source.is_empty() or not p.target.is_empty():
                ps.append(p)
        ps.sort(key=lambda p: (p.source.lo, p.source.hi))
        merged: list[ExchangePiece] = []
        for p in ps:
            if merged:
                last = merged[-1]
                if (
                    last.source.hi == p.source.lo
                    and last.target.hi == p.target.lo
                    and last.source.length == last.target.length
                    and p.source.length == p.target.length
                ):
                    merged[-1] = ExchangePiece(
                        Interval(last.source.lo, p.source.hi), Interval(last.target.lo, p.target.hi)
                    )
                    continue
            merged.append(p)
        self.pieces: tuple[ExchangePiece, ...] = tuple(merged)
        self._los = [p.source.lo for p in merged]
        self._domain = domain if domain is not None else IntervalSet(p.source for p in merged)

    @classmethod
    def identity(cls, domain: IntervalSet) -> "IntervalExchange":
        return cls(((iv, iv) for iv in domain), domain)

    @classmethod
    def from_shifts(cls, items: Iterable[tuple[Interval, Fraction]]) -> "IntervalExchange":
        return cls(ExchangePiece(iv, iv.translate(d)) for iv, d in items)

    @property
    def domain(self) -> IntervalSet:
        return self._domain

    def __len__(self):
        return len(self.pieces)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalExchange) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        return "IntervalExchange(" + ", ".join(map(repr, self.pieces)) + ")"

    def breakpoints(self) -> list[Fraction]:
        pts = set()
        for p in self.pieces:
            pts.update((p.source.lo, p.source.hi))
        return sorted(pts)

    def piece_at(self, x) -> ExchangePiece:
        i = bisect.bisect_right(self._los, x) - 1
        if i >= 0 and x in self.pieces[i].source:
            return self.pieces[i]
        raise UndefinedPointError(f"{x} lies in no source piece")

    def __call__(self, x) -> Fraction:
        x = rat(x)
        return x + self.piece_at(x).shift

    def _overlapping(self, iv: Interval):
        i = max(bisect.bisect_right(self._los, iv.lo) - 1, 0)
        while i < len(self.pieces) and self.pieces[i].source.lo < iv.hi:
            sub = self.pieces[i].source.intersect(iv)
            if sub is not None:
                yield self.pieces[i], sub
            i += 1

    def inverse(self) -> "IntervalExchange":
        return IntervalExchange(((p.target, p.source) for p in self.pieces), self._domain)

    def restrict(self, S: IntervalSet) -> "IntervalExchange":
        out = []
        for iv in S:
            for p, sub in self._overlapping(iv):
                out.append(ExchangePiece(sub, sub.translate(p.shift)))
        return IntervalExchange(out, S)

    def glue(self, other: "IntervalExchange") -> "IntervalExchange":
        if not self._domain.isdisjoint(other._domain):
            raise DomainMismatchError("glued exchanges must have disjoint domains")
        return IntervalExchange(self.pieces + other.pieces, self._domain | other._domain)

    def pullback(self, g: PiecewiseAffine) -> PiecewiseAffine:
        """``g ∘ self`` as a piecewise-affine function on the domain."""
        out = []
        for p in self.pieces:
            d = p.shift
            for q, sub in g._overlapping(p.target):
                src = sub.translate(-d)
                out.append(AffinePiece(src, q.slope, q.intercept + q.slope * d))
        return PiecewiseAffine._make(out)

    def validate(self) -> None:
        report = verify_measure_preserving(self)
        if not report.ok:
            raise PreconditionError("invalid interval exchange: " + "; ".join(report.issues))


def rotation(a) -> IntervalExchange:
    """``t ↦ {t − a}`` on ``[0, 1)``."""
    a = rat(a)
    if not 0 <= a <= 1:
        raise PreconditionError(f"rotation amount {a} outside [0, 1]")
    if a in (0, 1):
        return IntervalExchange.identity(IntervalSet.unit())
    return IntervalExchange(
        [
            ExchangePiece(Interval(a, 1), Interval(0, 1 - a)),
            ExchangePiece(Interval(0, a), Interval(1 - a, 1)),
        ]
    )


def pack_sequence(sets: Sequence[IntervalSet], start=0) -> IntervalExchange:
    """Translate the pieces of ``sets`` (in order) onto consecutive intervals from ``start``."""
    pos = rat(start)
    pieces = []
    for S in sets:
        for iv in S:
            pieces.append(ExchangePiece(iv, Interval(pos, pos + iv.length)))
            pos += iv.length
    domain = IntervalSet()
    for S in sets:
        domain = domain | S
    return IntervalExchange(pieces, domain)


def canonical_pack(S: IntervalSet) -> IntervalExchange:
    """Order-preserving translation of ``S`` onto ``[0, measure(S))``."""
    if not S:
        raise PreconditionError("cannot pack the empty set")
    return pack_sequence([S])


def transport(A: IntervalSet, B: IntervalSet) -> list[ExchangePiece]:
    """Order-preserving piecewise translation of ``A`` onto ``B`` (equal measures)."""
    if A.measure != B.measure:
        raise PreconditionError(f"transport between sets of measures {A.measure} and {B.measure}")
    out = []
    a, b = list(A), list(B)
    i = j = 0
    alo, blo = (a[0].lo if a else None), (b[0].lo if b else None)
    while i < len(a) and j < len(b):
        step = min(a[i].hi - alo, b[j].hi - blo)
        out.append(ExchangePiece(Interval(alo, alo + step), Interval(blo, blo + step)))
        alo += step
        blo += step
        if alo == a[i].hi:
            i += 1
            if i < len(a):
                alo = a[i].lo
        if blo == b[j].hi:
            j += 1
            if j < len(b):
                blo = b[j].lo
    return out


def apply(T: IntervalExchange, x) -> Fraction:
    return T(x)


def invert(T: IntervalExchange) -> IntervalExchange:
    return T.inverse()


def compose(T2: IntervalExchange, T1: IntervalExchange) -> IntervalExchange:
    """``T2 ∘ T1``; both must share a domain."""
    if T2.domain != T1.domain:
        raise DomainMismatchError("composed exchanges must share a domain")
    return chain(T2, T1)


def chain(T2: IntervalExchange, T1: IntervalExchange) -> IntervalExchange:
    """``T2 ∘ T1`` where the targets of ``T1`` lie in the domain of ``T2``."""
    out = []
    for p in T1.pieces:
        for q, sub in T2._overlapping(p.target):
            src = sub.translate(-p.shift)
            out.append(ExchangePiece(src, sub.translate(q.shift)))
    return IntervalExchange(out, T1.domain)


def map_set(T: IntervalExchange, S: IntervalSet) -> IntervalSet:
    if not S.issubset(T.domain):
        raise DomainMismatchError(f"{S} is not contained in the exchange's domain")
    out = []
    for iv in S:
        for p, sub in T._overlapping(iv):
            out.append(sub.translate(p.shift))
    return IntervalSet(out)


@dataclass
class MeasureReport:
    ok: bool
    total_measure: Fraction
    piece_count: int
    issues: list[str] = field(default_factory=list)


def verify_measure_preserving(T: IntervalExchange) -> MeasureReport:
    """Check equal lengths, disjoint sources, disjoint targets, and both covering the domain."""
    issues = []
    for p in T.pieces:
        if p.source.length != p.target.length:
            issues.append(f"piece {p!r} changes length")
    for name, ivs in (("source", [p.source for p in T.pieces]), ("target", [p.target for p in T.pieces])):
        ordered = sorted(ivs)
        for u, v in zip(ordered, ordered[1:]):
            if v.lo < u.hi:
                issues.append(f"overlapping {name}s {u!r} and {v!r}")
        if IntervalSet(ivs) != T.domain:
            issues.append(f"{name}s do not tile the domain {T.domain!r}")
    return MeasureReport(not issues, T.domain.measure, len(T.pieces), issues)
