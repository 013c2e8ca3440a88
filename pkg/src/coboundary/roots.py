"""Root finding for monotone functions that are piecewise polynomial of degree ≤ 2.

Between consecutive known breakpoints the function is affine (step
integrands) or quadratic (piecewise-affine integrands).  Affine segments give
an exact rational root.  Quadratic segments give one when the discriminant is
a perfect square; otherwise the root is bracketed by bisection and the
simplest rational inside the final bracket is returned together with its
residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .errors import PreconditionError


@dataclass(frozen=True)
class Root:
    x: Fraction
    residual: Fraction
    exact: bool


def simplest_between(a: Fraction, b: Fraction) -> Fraction:
    """The rational with smallest denominator in the closed interval ``[a, b]``."""
    if a > b:
        a, b = b, a
    if a <= 0 <= b:
        return Fraction(0)
    if b < 0:
        return -simplest_between(-b, -a)
    fl = math.floor(a)
    if fl == a:
        return Fraction(fl)
    if fl + 1 <= b:
        return Fraction(fl + 1)
    # a, b share the integer part; recurse on reciprocals of the fractional parts
    rest = simplest_between(1 / (b - fl), 1 / (a - fl))
    return fl + 1 / rest


def _exact_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _quadratic_roots(x0, x1, x2, y0, y1, y2) -> list[Fraction]:
    """Rational roots of the parabola through three points (empty if irrational)."""
    # Newton form: y = y0 + d1 (x - x0) + d2 (x - x0)(x - x1)
    d1 = (y1 - y0) / (x1 - x0)
    d2 = ((y2 - y1) / (x2 - x1) - d1) / (x2 - x0)
    # expand to A x^2 + B x + C
    A = d2
    B = d1 - d2 * (x0 + x1)
    C = y0 - d1 * x0 + d2 * x0 * x1
    if A == 0:
        return [] if B == 0 else [-C / B]
    s = _exact_sqrt(B * B - 4 * A * C)
    if s is None:
        return []
    return [(-B - s) / (2 * A), (-B + s) / (2 * A)]


def leftmost_root(
    F: Callable[[Fraction], Fraction],
    lo: Fraction,
    hi: Fraction,
    breakpoints: Iterable[Fraction] = (),
    degree: int = 1,
    tol: Fraction = Fraction(0),
) -> Root:
    """Leftmost zero of a monotone ``F`` on ``[lo, hi]`` whose endpoint values do not share a sign."""
    pts = sorted({lo, hi} | {b for b in breakpoints if lo < b < hi})
    vals = [F(p) for p in pts]
    if vals[0] != 0 and vals[-1] != 0 and (vals[0] > 0) == (vals[-1] > 0):
        raise PreconditionError(f"no sign change on [{lo}, {hi}]: F = {vals[0]}, {vals[-1]}")
    rising = vals[-1] > vals[0]
    for i, v in enumerate(vals):
        if v == 0:
            return Root(pts[i], Fraction(0), True)
        if i + 1 < len(vals) and (vals[i + 1] == 0 or (vals[i + 1] > 0) != (v > 0)):
            if vals[i + 1] == 0:
                return Root(pts[i + 1], Fraction(0), True)
            return _segment_root(F, pts[i], pts[i + 1], v, vals[i + 1], degree, tol, rising)
    raise PreconditionError("root bracket lost")  # pragma: no cover


def _segment_root(F, a, b, fa, fb, degree, tol, rising) -> Root:
    if degree <= 1:
        x = a + (b - a) * fa / (fa - fb)
        return Root(x, F(x), F(x) == 0)
    m = (a + b) / 2
    for x in _quadratic_roots(a, m, b, fa, F(m), fb):
        if a <= x <= b and F(x) == 0:
            return Root(x, Fraction(0), True)
    if tol <= 0:
        raise PreconditionError("irrational root and no tolerance given")
    x = _simplest_in_window(F if rising else (lambda t: -F(t)), a, b, tol)
    fx = F(x)
    return Root(x, fx, fx == 0)


def _simplest_in_window(g, a, b, tol, max_steps: int = 400) -> Fraction:
    """Simplest ``x`` in ``[a, b]`` with ``|g(x)| <= tol`` for increasing ``g``, ``g(a) < 0 < g(b)``.

    Both edges of the window ``{|g| <= tol}`` are bisected from outside until
    they are pinned far more tightly than the window is wide, so the returned
    denominator is close to the smallest the tolerance allows.
    """
    # la: g < -tol, lb: g >= -tol; ra: g <= tol, rb: g > tol
    la, lb = (a, a) if g(a) >= -tol else (a, b)
    ra, rb = (b, b) if g(b) <= tol else (a, b)
    for _ in range(max_steps):
        inner = ra - lb
        if inner > 0 and lb - la <= inner / 16 and rb - ra <= inner / 16:
            break
        if lb - la >= rb - ra:
            m = (la + lb) / 2
            if g(m) >= -tol:
                lb = m
            else:
                la = m
        else:
            m = (ra + rb) / 2
            if g(m) <= tol:
                ra = m
            else:
                rb = m
    if ra < lb:  # pragma: no cover - window narrower than the step budget resolves
        raise PreconditionError("tolerance window too narrow to locate a root")
    return simplest_between(lb, ra)
