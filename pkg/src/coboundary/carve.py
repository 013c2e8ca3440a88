"""Carving mean-zero subsets out of finite interval unions.

* :func:`carve_mean_zero` removes a small piece of ``{f > ‖f⁺‖/2}`` from the
  left so that the integral over the rest vanishes.
* :func:`shrink_mean_zero` trims a prescribed measure from the outer ends of
  ``{f > 0}`` and ``{f < 0}`` (and symmetrically from ``{f = 0}``), keeping the
  integral at zero and cutting both endpoints away.
* :func:`rational_split` and :func:`split_half` add control of the share of
  measure left of a cut point.

Step integrands are solved exactly.  Piecewise-affine integrands (sampled
parts) are solved exactly when the root is rational and otherwise to a
tolerance that is always recorded in the returned :class:`CarveTrace`.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainMismatchError, PreconditionError
from .rational import Interval, IntervalSet, PiecewiseAffine, rat
from .roots import leftmost_root

DEFAULT_TOLERANCE = Fraction(1, 10**9)


@dataclass
class CarveTrace:
    kind: str
    exact: bool = True
    tolerance: Fraction = Fraction(0)
    residual: Fraction = Fraction(0)
    sign: int = 1
    r0: Fraction | None = None
    t0: Fraction | None = None
    h_t0: Fraction | None = None
    zero_trim: Fraction = Fraction(0)
    removed_pos: IntervalSet = field(default_factory=IntervalSet)
    removed_neg: IntervalSet = field(default_factory=IntervalSet)
    f_plus: list[tuple[Fraction, Fraction]] = field(default_factory=list)
    f_minus: list[tuple[Fraction, Fraction]] = field(default_factory=list)
    ratio: tuple[int, int] | None = None
    children: list["CarveTrace"] = field(default_factory=list)

    def monotone(self) -> bool:
        return all(
            b[1] >= a[1] and b[0] >= a[0]
            for table in (self.f_plus, self.f_minus)
            for a, b in zip(table, table[1:])
        )


def _degree(f: PiecewiseAffine) -> int:
    return 1 if f.is_step() else 2


def _is_zero(f: PiecewiseAffine) -> bool:
    return not f.pieces or f.sup_norm() == 0


class _EndTrim:
    """Parts of a set within distance ``a`` of either end of an enclosing hull."""

    def __init__(self, S: IntervalSet, lo: Fraction, hi: Fraction, f: PiecewiseAffine):
        self.S, self.lo, self.hi = S, lo, hi
        self.half = (hi - lo) / 2
        pts = set(S.boundary()) | {x for x in f.breakpoints() if lo <= x <= hi}
        self.a_breaks = sorted({d for x in pts for d in (x - lo, hi - x) if 0 <= d <= self.half} | {self.half})
        self._rows = None

    def part(self, a: Fraction) -> IntervalSet:
        a = min(a, self.half)
        ends = IntervalSet([Interval(self.lo, self.lo + a), Interval(self.hi - a, self.hi)])
        return self.S & ends

    def distance_for(self, t: Fraction) -> Fraction:
        """Smallest trim distance removing measure ``t`` (measure is linear in ``a`` between breaks)."""
        if t == 0:
            return Fraction(0)
        table = self._table()
        i = bisect_left(table, t, key=lambda row: row[1])
        if i == len(table):
            raise PreconditionError(f"cannot trim measure {t} from a set of measure {table[-1][1]}")
        a1, m1 = table[i]
        if m1 == t or i == 0:
            return a1
        a0, m0 = table[i - 1]
        return a0 + (a1 - a0) * (t - m0) / (m1 - m0)

    def _table(self) -> list[tuple[Fraction, Fraction]]:
        if self._rows is None:
            self._rows = [(a, self.part(a).measure) for a in sorted({Fraction(0), *self.a_breaks})]
        return self._rows

    def t_breaks(self) -> list[Fraction]:
        return sorted({m for _, m in self._table()})


def _check_subset(inner: IntervalSet, outer: IntervalSet, what: str) -> None:
    if not inner.issubset(outer):
        raise DomainMismatchError(f"{what} is not contained in the enclosing set")


def carve_mean_zero(D: IntervalSet, f: PiecewiseAffine, E: IntervalSet, eps, tol=DEFAULT_TOLERANCE):
    """Return ``(K, trace)`` with ``K ⊆ E`` and ``∫_K f = 0`` when ``E`` misses little of ``D``."""
    eps, tol = rat(eps), rat(tol)
    _check_subset(E, D, "E")
    fD = f.restrict(D)
    if fD.domain != D:
        raise DomainMismatchError("f must be defined on all of D")
    exact = fD.is_step()
    trace = CarveTrace("carve_mean_zero", exact=exact, tolerance=Fraction(0) if exact else tol)
    total = fD.integrate()
    if (exact and total != 0) or abs(total) > tol:
        raise PreconditionError(f"∫_D f = {total}, not 0")
    if _is_zero(fD):
        return E, trace
    fplus, fminus, fnorm = max(fD.sup(), 0), max(-fD.inf(), 0), fD.sup_norm()
    tau_p = fD.where(">", fplus / 2).measure
    tau_m = fD.where("<", -fminus / 2).measure
    threshold = min(tau_p * fplus / fnorm, tau_m * fminus / fnorm) / 4
    if eps > threshold:
        raise PreconditionError(f"eps = {eps} exceeds the admissible threshold {threshold}")
    if (D - E).measure > eps:
        raise PreconditionError(f"λ(D∖E) = {(D - E).measure} exceeds eps = {eps}")
    excess = fD.integrate(E)
    sign = 1 if excess >= 0 else -1
    h = fD.scale(sign)
    hplus = fplus if sign == 1 else fminus
    P = h.restrict(E).where(">", hplus / 2)
    lo, hi = E.inf, E.sup

    def F(r):
        return sign * excess - h.integrate(P.clip(lo, r))

    breaks = set(P.boundary()) | set(h.breakpoints())
    root = leftmost_root(F, lo, hi, breaks, _degree(h), tol)
    removed = P.clip(lo, root.x)
    K = E - removed
    trace.sign, trace.r0 = sign, root.x
    trace.removed_pos = removed
    trace.exact = root.exact
    trace.residual = fD.integrate(K)
    bound = D.measure - (1 + 2 * fnorm * max(1 / fplus, 1 / fminus)) * eps
    if K.measure < bound:
        raise PreconditionError(f"carved set too small: {K.measure} < {bound}")  # pragma: no cover
    return K, trace


def shrink_mean_zero(K: IntervalSet, f: PiecewiseAffine, c, tol=DEFAULT_TOLERANCE):
    """Return ``(E, trace)`` with ``λ(E) = λ(K) − c``, ``∫_E f = 0`` and both endpoints of ``K`` cut away."""
    c, tol = rat(c), rat(tol)
    if not K:
        raise PreconditionError("cannot shrink the empty set")
    if not 0 < c < K.measure:
        raise PreconditionError(f"c = {c} outside (0, {K.measure})")
    fK = f.restrict(K)
    if fK.domain != K:
        raise DomainMismatchError("f must be defined on all of K")
    exact = fK.is_step()
    total = fK.integrate()
    if (exact and total != 0) or abs(total) > tol:
        raise PreconditionError(f"∫_K f = {total}, not 0")
    trace = CarveTrace("shrink_mean_zero", exact=exact, tolerance=Fraction(0) if exact else tol)
    lo, hi = K.inf, K.sup
    P, N = fK.where(">", 0), fK.where("<", 0)
    Z = K - P - N
    # split c proportionally so every class loses a positive share
    c_z = c * Z.measure / K.measure
    c_nz = c - c_z
    zero_removed = IntervalSet()
    if c_z:
        trim = _EndTrim(Z, lo, hi, fK)
        zero_removed = trim.part(trim.distance_for(c_z))
    trace.zero_trim = c_z
    removed_pos = removed_neg = IntervalSet()
    if c_nz:
        tp, tn = _EndTrim(P, lo, hi, fK), _EndTrim(N, lo, hi, fK)

        def F_plus(t):
            return fK.integrate(tp.part(tp.distance_for(t)))

        def F_minus(s):
            return -fK.integrate(tn.part(tn.distance_for(s)))

        def psi(t):
            return F_plus(t) - F_minus(c_nz - t)

        t_lo = max(Fraction(0), c_nz - N.measure)
        t_hi = min(c_nz, P.measure)
        breaks = set(tp.t_breaks()) | {c_nz - s for s in tn.t_breaks()}
        root = leftmost_root(psi, t_lo, t_hi, breaks, _degree(fK), tol)
        t0 = root.x
        removed_pos = tp.part(tp.distance_for(t0))
        removed_neg = tn.part(tn.distance_for(c_nz - t0))
        trace.t0, trace.h_t0 = t0, c_nz - t0
        trace.exact = root.exact
        trace.f_plus = [(t, F_plus(t)) for t in sorted({Fraction(0), t0, *[b for b in tp.t_breaks() if b <= t_hi]})]
        trace.f_minus = [(s, F_minus(s)) for s in sorted({Fraction(0), c_nz - t0, *[b for b in tn.t_breaks() if b <= c_nz - t_lo]})]
    E = K - zero_removed - removed_pos - removed_neg
    trace.removed_pos, trace.removed_neg = removed_pos, removed_neg | zero_removed
    trace.residual = fK.integrate(E)
    if E.measure != K.measure - c:
        raise PreconditionError("measure bookkeeping failed")  # pragma: no cover
    if E and not (E.inf > lo and E.sup < hi):
        raise PreconditionError("endpoints of K were not excluded")  # pragma: no cover
    return E, trace


def _dyadic_below(x: Fraction, k: int) -> Fraction:
    return Fraction(int(x * 2**k), 2**k)


def rational_split(K1: IntervalSet, K2: IntervalSet, f: PiecewiseAffine, eps, tol=DEFAULT_TOLERANCE):
    """Return ``(E, p, q, trace)`` with ``λ(E ∩ K1)/λ(E) = p/q`` and ``∫_E f = 0``.

    With rational endpoints the ratio is rational already, so ``E = K1 ∪ K2``
    except in the degenerate ``f ≡ 0`` case, where part of ``K1`` is dropped to
    make the ratio dyadic.
    """
    eps, tol = rat(eps), rat(tol)
    if not K1.isdisjoint(K2):
        raise PreconditionError("K1 and K2 must be disjoint")
    K = K1 | K2
    if not K:
        raise PreconditionError("K1 ∪ K2 must have positive measure")
    fK = f.restrict(K)
    exact = fK.is_step()
    total = fK.integrate()
    if (exact and total != 0) or abs(total) > tol:
        raise PreconditionError(f"∫_K f = {total}, not 0")
    trace = CarveTrace("rational_split", exact=True, tolerance=Fraction(0) if exact else tol, residual=total)
    E = K
    if K1 and K2 and _is_zero(fK):
        R0 = K1.measure / K.measure
        k = 1
        while True:
            rho = _dyadic_below(R0, k)
            if rho > 0:
                keep = rho * K2.measure / (1 - rho)
                if K1.measure - keep <= eps:
                    break
            k += 1
        r = K1.point_at_measure(keep)
        E = K1.clip(K1.inf, r) | K2
        trace.r0 = r
    ratio = (E & K1).measure / E.measure
    trace.ratio = (ratio.numerator, ratio.denominator)
    return E, ratio.numerator, ratio.denominator, trace


def split_half(K: IntervalSet, f: PiecewiseAffine, c, tol=DEFAULT_TOLERANCE):
    """Return ``(E, p, q, trace)``: shrink by ``c`` with an exact left-of-midpoint share ``p/q``."""
    c, tol = rat(c), rat(tol)
    if not K:
        raise PreconditionError("cannot split the empty set")
    mid = (K.inf + K.sup) / 2
    KL, KR = K.clip(K.inf, mid), K.clip(mid, K.sup)
    if not KL or not KR:
        E, trace = shrink_mean_zero(K, f, c, tol)
        p = 1 if KL else 0
        trace.ratio = (p, 1)
        return E, p, 1, trace
    if not 0 < c < min(KL.measure, KR.measure):
        raise PreconditionError(f"c = {c} outside (0, {min(KL.measure, KR.measure)})")
    Kt, p, q, split_trace = rational_split(KL, KR, f, c / 2, tol)
    delta = K.measure - Kt.measure
    share = Fraction(p, q)
    KtL, KtR = Kt & KL, Kt & KR
    fK = f.restrict(K)
    hL = fK.restrict(KtL).shift(-fK.integrate(KtL) / KtL.measure)
    hR = fK.restrict(KtR).shift(-fK.integrate(KtR) / KtR.measure)
    EL, trL = shrink_mean_zero(KtL, hL, share * (c - delta), tol)
    ER, trR = shrink_mean_zero(KtR, hR, (1 - share) * (c - delta), tol)
    E = EL | ER
    trace = CarveTrace(
        "split_half",
        exact=split_trace.exact and trL.exact and trR.exact,
        tolerance=Fraction(0) if fK.is_step() else tol,
        residual=fK.integrate(E),
        ratio=(p, q),
        children=[split_trace, trL, trR],
    )
    if (E & KL).measure / E.measure != share:
        raise PreconditionError("left share drifted")  # pragma: no cover
    return E, p, q, trace
