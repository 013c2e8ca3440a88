"""Exact scalars, half-open interval sets, and piecewise-affine functions.

Every quantity is a :class:`fractions.Fraction`.  Intervals are half-open
``[lo, hi)`` so that finite partitions are exact and "mod 0" statements
reduce to "except at finitely many breakpoints".
"""
from __future__ import annotations

import bisect
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .errors import DomainMismatchError, PreconditionError, ResourceLimitError

Rat = Fraction

DENOMINATOR_BITS_ENV = "COBOUNDARY_MAX_DENOMINATOR_BITS"


def rat(x) -> Fraction:
    """Coerce ``x`` (int, Fraction or ``"p/q"`` string) to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or isinstance(x, float):
        raise PreconditionError(f"refusing inexact scalar {x!r}; pass a rational string")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise PreconditionError(f"not a rational number: {x!r}") from exc
    raise PreconditionError(f"cannot interpret {x!r} as a rational")


def fmt(x: Fraction) -> str:
    return str(Fraction(x))


def max_denominator_bits() -> int | None:
    raw = os.environ.get(DENOMINATOR_BITS_ENV, "").strip()
    if not raw:
        return None
    return int(raw)


def guard_denominators(values: Iterable[Fraction], what: str = "value") -> None:
    """Raise :class:`ResourceLimitError` when a denominator exceeds the configured bit size."""
    limit = max_denominator_bits()
    if limit is None:
        return
    for v in values:
        if v.denominator.bit_length() > limit:
            raise ResourceLimitError(
                f"{what} denominator has {v.denominator.bit_length()} bits (limit {limit})"
            )


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", rat(self.lo))
        object.__setattr__(self, "hi", rat(self.hi))
        if self.lo > self.hi:
            raise PreconditionError(f"interval with lo > hi: [{self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x < self.hi

    def is_empty(self) -> bool:
        return self.lo == self.hi

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else None

    def translate(self, d: Fraction) -> "Interval":
        return Interval(self.lo + d, self.hi + d)

    def __repr__(self):
        return f"[{self.lo}, {self.hi})"


class IntervalSet:
    """A finite union of half-open intervals in canonical merged form."""

    __slots__ = ("pieces", "_los")

    def __init__(self, pieces: Iterable = ()):
        ivs = []
        for p in pieces:
            iv = p if isinstance(p, Interval) else Interval(*p)
            if not iv.is_empty():
                ivs.append(iv)
        ivs.sort()
        merged: list[Interval] = []
        for iv in ivs:
            if merged and iv.lo <= merged[-1].hi:
                if iv.hi > merged[-1].hi:
                    merged[-1] = Interval(merged[-1].lo, iv.hi)
            else:
                merged.append(iv)
        self.pieces: tuple[Interval, ...] = tuple(merged)
        self._los = [iv.lo for iv in merged]

    @classmethod
    def of(cls, *pairs) -> "IntervalSet":
        return cls(Interval(rat(a), rat(b)) for a, b in pairs)

    @classmethod
    def unit(cls) -> "IntervalSet":
        return cls([Interval(0, 1)])

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)

    def __bool__(self) -> bool:
        return bool(self.pieces)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self.pieces == other.pieces

    def __hash__(self) -> int:
        return hash(self.pieces)

    def __repr__(self) -> str:
        if not self.pieces:
            return "IntervalSet(∅)"
        return "IntervalSet(" + " ∪ ".join(map(repr, self.pieces)) + ")"

    @property
    def measure(self) -> Fraction:
        return sum((iv.length for iv in self.pieces), Fraction(0))

    @property
    def inf(self) -> Fraction:
        if not self.pieces:
            raise PreconditionError("inf of the empty set")
        return self.pieces[0].lo

    @property
    def sup(self) -> Fraction:
        if not self.pieces:
            raise PreconditionError("sup of the empty set")
        return self.pieces[-1].hi

    def boundary(self) -> list[Fraction]:
        pts = []
        for iv in self.pieces:
            pts.extend((iv.lo, iv.hi))
        return pts

    def __contains__(self, x) -> bool:
        i = bisect.bisect_right(self._los, x) - 1
        return i >= 0 and x in self.pieces[i]

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.pieces + other.pieces)

    __or__ = union

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self.pieces, other.pieces
        i = j = 0
        while i < len(a) and j < len(b):
            iv = a[i].intersect(b[j])
            if iv is not None:
                out.append(iv)
            if a[i].hi <= b[j].hi:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    __and__ = intersection

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        b = other.pieces
        j = 0
        for iv in self.pieces:
            lo = iv.lo
            while j < len(b) and b[j].hi <= lo:
                j += 1
            k = j
            while k < len(b) and b[k].lo < iv.hi:
                if b[k].lo > lo:
                    out.append(Interval(lo, b[k].lo))
                lo = max(lo, b[k].hi)
                k += 1
            if lo < iv.hi:
                out.append(Interval(lo, iv.hi))
        return IntervalSet(out)

    __sub__ = difference

    def clip(self, lo, hi) -> "IntervalSet":
        lo, hi = rat(lo), rat(hi)
        if lo >= hi:
            return IntervalSet()
        return self.intersection(IntervalSet([Interval(lo, hi)]))

    def translate(self, d) -> "IntervalSet":
        d = rat(d)
        return IntervalSet(iv.translate(d) for iv in self.pieces)

    def issubset(self, other: "IntervalSet") -> bool:
        return not self.difference(other)

    def isdisjoint(self, other: "IntervalSet") -> bool:
        return not self.intersection(other)

    def measure_below(self, x) -> Fraction:
        """Measure of ``self ∩ (-∞, x)``."""
        total = Fraction(0)
        for iv in self.pieces:
            if iv.lo >= x:
                break
            total += min(iv.hi, x) - iv.lo
        return total

    def point_at_measure(self, m) -> Fraction:
        """Smallest ``x`` with ``measure_below(x) == m`` (leftmost quantile)."""
        m = rat(m)
        if m < 0 or m > self.measure:
            raise PreconditionError(f"measure {m} outside [0, {self.measure}]")
        if not self.pieces:
            return Fraction(0)
        acc = Fraction(0)
        for iv in self.pieces:
            if acc + iv.length >= m:
                return iv.lo + (m - acc)
            acc += iv.length
        return self.pieces[-1].hi


def _as_set(S) -> IntervalSet:
    if isinstance(S, IntervalSet):
        return S
    if isinstance(S, Interval):
        return IntervalSet([S])
    return IntervalSet(S)


@dataclass(frozen=True)
class AffinePiece:
    """``x ↦ slope·x + intercept`` on ``interval``."""

    interval: Interval
    slope: Fraction
    intercept: Fraction

    def __call__(self, x) -> Fraction:
        return self.slope * x + self.intercept

    @property
    def at_lo(self) -> Fraction:
        return self(self.interval.lo)

    @property
    def at_hi(self) -> Fraction:
        return self(self.interval.hi)

    def on(self, iv: Interval) -> "AffinePiece":
        return AffinePiece(iv, self.slope, self.intercept)

    def integral(self, iv: Interval | None = None) -> Fraction:
        iv = self.interval if iv is None else iv
        return self.slope * (iv.hi * iv.hi - iv.lo * iv.lo) / 2 + self.intercept * iv.length


class PiecewiseAffine:
    """A function affine on each of finitely many disjoint half-open intervals."""

    __slots__ = ("pieces", "_los")

    def __init__(self, pieces: Iterable[AffinePiece]):
        ps = sorted((p for p in pieces if not p.interval.is_empty()), key=lambda p: p.interval.lo)
        merged: list[AffinePiece] = []
        for p in ps:
            if merged:
                last = merged[-1]
                if p.interval.lo < last.interval.hi:
                    raise PreconditionError(f"overlapping pieces {last.interval} and {p.interval}")
                if (
                    p.interval.lo == last.interval.hi
                    and p.slope == last.slope
                    and p.intercept == last.intercept
                ):
                    merged[-1] = last.on(Interval(last.interval.lo, p.interval.hi))
                    continue
            merged.append(p)
        self.pieces: tuple[AffinePiece, ...] = tuple(merged)
        self._los = [p.interval.lo for p in merged]

    @classmethod
    def _make(cls, pieces) -> "PiecewiseAffine":
        pieces = list(pieces)
        if all(p.slope == 0 for p in pieces):
            return StepFunction._from_affine(pieces)
        return PiecewiseAffine(pieces)

    @classmethod
    def affine(cls, domain, slope, intercept) -> "PiecewiseAffine":
        s, c = rat(slope), rat(intercept)
        return cls._make(AffinePiece(iv, s, c) for iv in _as_set(domain))

    @classmethod
    def constant(cls, domain, value) -> "PiecewiseAffine":
        return cls.affine(domain, 0, value)

    def __repr__(self):
        body = ", ".join(f"{p.interval}: {p.slope}·x + {p.intercept}" for p in self.pieces)
        return f"{type(self).__name__}({body})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PiecewiseAffine) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    @property
    def domain(self) -> IntervalSet:
        return IntervalSet(p.interval for p in self.pieces)

    def is_step(self) -> bool:
        return all(p.slope == 0 for p in self.pieces)

    def breakpoints(self) -> list[Fraction]:
        pts = set()
        for p in self.pieces:
            pts.add(p.interval.lo)
            pts.add(p.interval.hi)
        return sorted(pts)

    def piece_at(self, x) -> AffinePiece | None:
        i = bisect.bisect_right(self._los, x) - 1
        if i >= 0 and x in self.pieces[i].interval:
            return self.pieces[i]
        return None

    def __call__(self, x) -> Fraction:
        p = self.piece_at(x)
        if p is None:
            raise DomainMismatchError(f"{x} is outside the function's domain")
        return p(x)

    def _overlapping(self, iv: Interval) -> Iterator[tuple[AffinePiece, Interval]]:
        i = max(bisect.bisect_right(self._los, iv.lo) - 1, 0)
        while i < len(self.pieces) and self.pieces[i].interval.lo < iv.hi:
            sub = self.pieces[i].interval.intersect(iv)
            if sub is not None:
                yield self.pieces[i], sub
            i += 1

    def restrict(self, S) -> "PiecewiseAffine":
        S = _as_set(S)
        out = []
        for iv in S:
            for p, sub in self._overlapping(iv):
                out.append(p.on(sub))
        return type(self)._make(out)

    def _require_within(self, S: IntervalSet) -> None:
        if not S.issubset(self.domain):
            raise DomainMismatchError(f"{S} is not contained in the domain {self.domain}")

    def integrate(self, S=None) -> Fraction:
        if S is None:
            return sum((p.integral() for p in self.pieces), Fraction(0))
        S = _as_set(S)
        self._require_within(S)
        total = Fraction(0)
        for iv in S:
            for p, sub in self._overlapping(iv):
                total += p.integral(sub)
        return total

    def _extremes(self, S=None) -> list[Fraction]:
        f = self if S is None else self.restrict(S)
        vals = []
        for p in f.pieces:
            vals.extend((p.at_lo, p.at_hi))
        return vals

    def sup(self, S=None) -> Fraction:
        vals = self._extremes(S)
        if not vals:
            raise PreconditionError("supremum over an empty domain")
        return max(vals)

    def inf(self, S=None) -> Fraction:
        vals = self._extremes(S)
        if not vals:
            raise PreconditionError("infimum over an empty domain")
        return min(vals)

    def sup_norm(self, S=None) -> Fraction:
        vals = self._extremes(S)
        if not vals:
            raise PreconditionError("sup norm over an empty domain")
        return max(abs(v) for v in vals)

    def oscillation(self, S=None) -> Fraction:
        vals = self._extremes(S)
        return max(vals) - min(vals) if vals else Fraction(0)

    def map_coefficients(self, fn: Callable[[AffinePiece], AffinePiece]) -> "PiecewiseAffine":
        return type(self)._make(fn(p) for p in self.pieces)

    def __neg__(self) -> "PiecewiseAffine":
        return self.scale(-1)

    def scale(self, c) -> "PiecewiseAffine":
        c = rat(c)
        return PiecewiseAffine._make(AffinePiece(p.interval, c * p.slope, c * p.intercept) for p in self.pieces)

    def shift(self, c) -> "PiecewiseAffine":
        c = rat(c)
        return PiecewiseAffine._make(AffinePiece(p.interval, p.slope, p.intercept + c) for p in self.pieces)

    def _combine(self, other: "PiecewiseAffine", sign: int) -> "PiecewiseAffine":
        if self.domain != other.domain:
            raise DomainMismatchError("functions have different domains")
        out = []
        for p in self.pieces:
            for q, sub in other._overlapping(p.interval):
                out.append(AffinePiece(sub, p.slope + sign * q.slope, p.intercept + sign * q.intercept))
        return PiecewiseAffine._make(out)

    def __add__(self, other: "PiecewiseAffine") -> "PiecewiseAffine":
        return self._combine(other, 1)

    def __sub__(self, other: "PiecewiseAffine") -> "PiecewiseAffine":
        return self._combine(other, -1)

    def glue(self, other: "PiecewiseAffine") -> "PiecewiseAffine":
        """Union of two functions with disjoint domains."""
        return PiecewiseAffine._make(self.pieces + other.pieces)

    def translate(self, d) -> "PiecewiseAffine":
        """The function ``x ↦ self(x - d)`` on ``domain + d``."""
        d = rat(d)
        return PiecewiseAffine._make(
            AffinePiece(p.interval.translate(d), p.slope, p.intercept - p.slope * d) for p in self.pieces
        )

    def where(self, op: str, c) -> IntervalSet:
        """Exact set ``{x : self(x) op c}`` for ``op`` in ``> >= < <= == !=``."""
        c = rat(c)
        out = []
        for p in self.pieces:
            iv = p.interval
            if p.slope == 0:
                if _compare(p.intercept, op, c):
                    out.append(iv)
                continue
            root = (c - p.intercept) / p.slope
            inc = p.slope > 0
            if op in (">", ">="):
                lo, hi = (max(iv.lo, root), iv.hi) if inc else (iv.lo, min(iv.hi, root))
            elif op in ("<", "<="):
                lo, hi = (iv.lo, min(iv.hi, root)) if inc else (max(iv.lo, root), iv.hi)
            elif op == "!=":
                lo, hi = iv.lo, iv.hi
            else:
                continue
            if lo < hi:
                out.append(Interval(lo, hi))
        return IntervalSet(out)


def _compare(a, op, b) -> bool:
    return {
        ">": a > b,
        ">=": a >= b,
        "<": a < b,
        "<=": a <= b,
        "==": a == b,
        "!=": a != b,
    }[op]


class StepFunction(PiecewiseAffine):
    """A piecewise-constant function; pieces are ``(interval, value)``."""

    __slots__ = ()

    def __init__(self, pieces: Iterable = ()):
        aff = []
        for item in pieces:
            if isinstance(item, AffinePiece):
                if item.slope != 0:
                    raise PreconditionError("step function piece with nonzero slope")
                aff.append(item)
                continue
            if len(item) == 3:
                lo, hi, value = item
                iv = Interval(rat(lo), rat(hi))
            else:
                iv, value = item
            aff.append(AffinePiece(iv, Fraction(0), rat(value)))
        super().__init__(aff)

    @classmethod
    def _from_affine(cls, pieces) -> "StepFunction":
        return cls(pieces)

    @classmethod
    def from_breaks(cls, breaks: Sequence, values: Sequence) -> "StepFunction":
        if len(breaks) != len(values) + 1:
            raise PreconditionError("need one more breakpoint than values")
        return cls((breaks[i], breaks[i + 1], values[i]) for i in range(len(values)))

    @property
    def value_pieces(self) -> list[tuple[Interval, Fraction]]:
        return [(p.interval, p.intercept) for p in self.pieces]

    def values(self) -> list[Fraction]:
        return [p.intercept for p in self.pieces]


# -- free-function surface ---------------------------------------------------


def integrate(f: PiecewiseAffine, S=None) -> Fraction:
    """Exact Lebesgue integral of ``f`` over ``S`` (default: its whole domain)."""
    return f.integrate(S)


def sup_norm(f: PiecewiseAffine) -> Fraction:
    return f.sup_norm()


def common_refinement(breakpoint_sources: Iterable[Iterable]) -> list[Fraction]:
    pts = set()
    for src in breakpoint_sources:
        pts.update(rat(x) for x in src)
    return sorted(pts)


def atoms(f: StepFunction) -> dict[Fraction, IntervalSet]:
    """Level sets of every value taken on positive measure, ordered by leftmost point."""
    groups: dict[Fraction, list[Interval]] = {}
    for iv, v in f.value_pieces:
        groups.setdefault(v, []).append(iv)
    return {v: IntervalSet(ivs) for v, ivs in groups.items()}


@dataclass(frozen=True)
class SampledFunction:
    """Samples of a continuous function with a declared Lipschitz-type modulus.

    Between grid points the function is represented by its linear
    interpolant; the true function may deviate from it by at most
    ``oscillation_bound(spacing)``.
    """

    grid: tuple[Fraction, ...]
    values: tuple[Fraction, ...]
    lipschitz: Fraction = Fraction(0)

    def __post_init__(self):
        grid = tuple(rat(x) for x in self.grid)
        values = tuple(rat(v) for v in self.values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lipschitz", rat(self.lipschitz))
        if len(grid) != len(values):
            raise PreconditionError("grid and values differ in length")
        if len(grid) < 2:
            raise PreconditionError("a sampled function needs at least two grid points")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise PreconditionError("grid must be strictly increasing")
        if self.lipschitz < 0:
            raise PreconditionError("modulus constant must be nonnegative")

    @classmethod
    def from_callable(cls, fn: Callable[[Fraction], Fraction], lo, hi, steps: int, lipschitz) -> "SampledFunction":
        lo, hi = rat(lo), rat(hi)
        grid = [lo + (hi - lo) * i / steps for i in range(steps + 1)]
        return cls(tuple(grid), tuple(rat(fn(x)) for x in grid), rat(lipschitz))

    @property
    def support(self) -> IntervalSet:
        return IntervalSet([Interval(self.grid[0], self.grid[-1])])

    @property
    def spacing(self) -> Fraction:
        return max(b - a for a, b in zip(self.grid, self.grid[1:]))

    def oscillation_bound(self, h=None) -> Fraction:
        h = self.spacing if h is None else rat(h)
        return self.lipschitz * h

    def interpolant(self) -> PiecewiseAffine:
        pieces = []
        for (x0, y0), (x1, y1) in zip(zip(self.grid, self.values), zip(self.grid[1:], self.values[1:])):
            slope = (y1 - y0) / (x1 - x0)
            pieces.append(AffinePiece(Interval(x0, x1), slope, y0 - slope * x0))
        return PiecewiseAffine._make(pieces)


@dataclass(frozen=True)
class HybridFunction:
    """``step_part`` on the whole domain plus an optional sampled continuous part.

    The sampled part is zero outside its grid range.
    """

    step_part: StepFunction
    sampled_part: SampledFunction | None = None

    def __post_init__(self):
        if not isinstance(self.step_part, StepFunction):
            raise PreconditionError("step_part must be a StepFunction")
        if self.sampled_part is not None and not self.sampled_part.support.issubset(self.domain):
            raise DomainMismatchError("sampled part extends beyond the step part's domain")

    @classmethod
    def from_step(cls, f: StepFunction) -> "HybridFunction":
        return cls(f, None)

    @property
    def domain(self) -> IntervalSet:
        return self.step_part.domain

    @property
    def sampled_region(self) -> IntervalSet:
        return IntervalSet() if self.sampled_part is None else self.sampled_part.support

    def reference(self) -> PiecewiseAffine:
        """Step part plus the linear interpolant of the samples, as one function."""
        if self.sampled_part is None:
            return self.step_part
        interp = self.sampled_part.interpolant()
        outside = self.domain.difference(self.sampled_region)
        extended = interp.glue(PiecewiseAffine.constant(outside, 0)) if outside else interp
        return self.step_part + extended

    def grid_values(self) -> list[tuple[Fraction, Fraction]]:
        """``(x, f(x))`` at every grid point inside the domain."""
        if self.sampled_part is None:
            return []
        dom = self.domain
        out = []
        for x, v in zip(self.sampled_part.grid, self.sampled_part.values):
            if x in dom:
                out.append((x, self.step_part(x) + v))
        return out

    def modulus_bound(self) -> Fraction:
        return Fraction(0) if self.sampled_part is None else self.sampled_part.oscillation_bound()

    def negate(self) -> "HybridFunction":
        sp = self.sampled_part
        neg_sp = None if sp is None else SampledFunction(sp.grid, tuple(-v for v in sp.values), sp.lipschitz)
        return HybridFunction(-self.step_part, neg_sp)
