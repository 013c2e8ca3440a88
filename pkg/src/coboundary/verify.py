"""Certificates and their independent verification.

The verifier recomputes every claim from ``(f, T, g)`` and the stated bounds.
Nothing produced by a solver other than those objects is trusted.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .errors import MalformedCertificateError, UndefinedPointError
from .exchange import IntervalExchange, verify_measure_preserving
from .rational import HybridFunction, PiecewiseAffine, common_refinement, rat


@dataclass
class BlockRecord:
    """Provenance of one solved block of the domain."""

    kind: str
    domain: Any
    solver: str
    residual: Fraction = Fraction(0)
    shift: Fraction = Fraction(0)
    converged: bool = True
    detail: dict = field(default_factory=dict)


@dataclass
class CoboundaryCertificate:
    f: HybridFunction
    T: IntervalExchange
    g: PiecewiseAffine
    eps: Fraction
    exact: bool
    residual_bound: Fraction
    norm_ratio: Fraction
    approximant: PiecewiseAffine | None = None
    modulus_bound: Fraction = Fraction(0)
    converged: bool = True
    blocks: list[BlockRecord] = field(default_factory=list)
    stage_ledger: list[dict] = field(default_factory=list)

    @property
    def exact_path(self) -> bool:
        """True when every block came from the finite-valued exact solver."""
        return bool(self.blocks) and all(b.solver == "exact" for b in self.blocks)


def norm_ratio(g: PiecewiseAffine, f: PiecewiseAffine) -> Fraction:
    fn = f.sup_norm() if f.pieces else Fraction(0)
    gn = g.sup_norm() if g.pieces else Fraction(0)
    if fn == 0:
        return Fraction(0) if gn == 0 else Fraction(10**18)
    return gn / fn


@dataclass
class Check:
    passed: bool
    detail: str = ""
    worst_point: Fraction | None = None
    value: Fraction | None = None


@dataclass
class VerificationReport:
    identity_check: Check
    measure_check: Check
    norm_check: Check
    exceptional_points: list[Fraction]

    @property
    def passed(self) -> bool:
        return self.identity_check.passed and self.measure_check.passed and self.norm_check.passed


def _atoms(points: list[Fraction], domain) -> list[tuple[Fraction, Fraction]]:
    out = []
    for lo, hi in zip(points, points[1:]):
        if lo in domain:
            out.append((lo, hi))
    return out


def _deviation(cert: CoboundaryCertificate, target: PiecewiseAffine):
    """Worst ``|g∘T − g − target|`` over the closure of each refinement atom."""
    T, g = cert.T, cert.g
    gb = sorted(g.breakpoints())
    pre = []
    for p in T.pieces:
        i = bisect_right(gb, p.target.lo)
        while i < len(gb) and gb[i] < p.target.hi:
            pre.append(gb[i] - p.shift)
            i += 1
    pts = common_refinement([target.breakpoints(), g.breakpoints(), T.breakpoints(), pre])
    worst, worst_at = Fraction(0), None
    for lo, hi in _atoms(pts, T.domain):
        mid = (lo + hi) / 2
        tp = T.piece_at(mid)
        gp_src = g.piece_at(mid)
        gp_dst = g.piece_at(mid + tp.shift)
        fp = target.piece_at(mid)
        if gp_src is None or gp_dst is None or fp is None:
            raise MalformedCertificateError(f"g or f undefined on the atom [{lo}, {hi})")
        # affine residual r(x) = slope·x + c on [lo, hi)
        slope = gp_dst.slope - gp_src.slope - fp.slope
        c = gp_dst.slope * tp.shift + gp_dst.intercept - gp_src.intercept - fp.intercept
        for x in (lo, hi):
            r = abs(slope * x + c)
            if r > worst:
                worst, worst_at = r, lo
    return worst, worst_at, pts


def verify_certificate(cert: CoboundaryCertificate, mode: str = "exact", tol=0) -> VerificationReport:
    """Check ``f = g∘T − g`` (up to the stated residual), measure preservation, and the norm bound."""
    tol = rat(tol)
    if mode not in ("exact", "numeric"):
        raise MalformedCertificateError(f"unknown verification mode {mode!r}")
    try:
        f_ref = cert.f.reference()
        if cert.T.domain != cert.f.domain or cert.g.domain != cert.f.domain:
            raise MalformedCertificateError("f, T and g must share one domain")
    except AttributeError as exc:
        raise MalformedCertificateError(str(exc)) from exc

    mreport = verify_measure_preserving(cert.T)
    measure_check = Check(mreport.ok, "; ".join(mreport.issues) or f"{mreport.piece_count} pieces")

    if not mreport.ok:
        identity_check = Check(False, "transformation is not a valid exchange")
        pts = cert.T.breakpoints()
    else:
        try:
            identity_check, pts = _identity(cert, f_ref, mode, tol)
        except UndefinedPointError as exc:
            identity_check, pts = Check(False, str(exc)), cert.T.breakpoints()

    ratio = norm_ratio(cert.g, f_ref)
    limit = Fraction(1) if cert.exact_path else 1 + cert.eps
    norm_ok = ratio <= limit and ratio == cert.norm_ratio
    norm_check = Check(norm_ok, f"‖g‖/‖f‖ = {ratio} (claimed {cert.norm_ratio}, limit {limit})", value=ratio)
    return VerificationReport(identity_check, measure_check, norm_check, pts)


def _identity(cert, f_ref, mode, tol):
    if cert.exact and cert.residual_bound != 0:
        return Check(False, "exact certificate with nonzero residual bound"), []
    worst, where, pts = _deviation(cert, f_ref)
    allowed = cert.residual_bound + (tol if mode == "numeric" else 0)
    ok = worst <= allowed
    detail = f"sup |g∘T − g − f| = {worst} (allowed {allowed})"
    if cert.approximant is not None:
        a_worst, a_where, a_pts = _deviation(cert, cert.approximant)
        pts = sorted(set(pts) | set(a_pts))
        if a_worst != 0:
            ok = False
            worst, where = a_worst, a_where
            detail = f"g∘T − g differs from the stated approximant by {a_worst}"
    if mode == "numeric" and ok:
        # raw samples, not only the interpolant
        diff = lambda x: cert.g(cert.T(x)) - cert.g(x)
        for x, fx in cert.f.grid_values():
            r = abs(diff(x) - fx)
            if r > cert.residual_bound + tol:
                ok, where = False, x
                detail = f"sample deviation {r} at {x} exceeds {cert.residual_bound + tol}"
                break
    if not ok and where is not None and "atom" not in detail:
        detail += f" (worst atom starts at {where})"
    return Check(ok, detail, where, worst), pts


def orbit(T: IntervalExchange, x, n: int) -> tuple[list[Fraction], str | None]:
    """``(x, T x, …, Tⁿ x)``; truncated with a notice if the orbit leaves the domain."""
    out = [rat(x)]
    for _ in range(n):
        try:
            out.append(T(out[-1]))
        except UndefinedPointError as exc:
            return out, f"orbit truncated after {len(out) - 1} steps: {exc}"
    return out, None
