"""JSON encoding of problems, certificates, reports and traces.

Every number is written as a rational string (``"3/4"``, ``"-1"``); nothing
exact ever passes through a float.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Any

from .errors import MalformedCertificateError, PreconditionError
from .exchange import ExchangePiece, IntervalExchange
from .rational import (
    AffinePiece,
    HybridFunction,
    Interval,
    IntervalSet,
    PiecewiseAffine,
    SampledFunction,
    StepFunction,
    fmt,
    rat,
)
from .verify import BlockRecord, Check, CoboundaryCertificate, VerificationReport

FORMAT_VERSION = 1


def parse_rat(s) -> Fraction:
    """Rational from a string such as ``"3/4"`` or ``"-2"`` (ints accepted, floats rejected)."""
    if isinstance(s, bool) or isinstance(s, float):
        raise PreconditionError(f"expected a rational string, got {s!r}")
    if isinstance(s, int):
        return Fraction(s)
    if not isinstance(s, str):
        raise PreconditionError(f"expected a rational string, got {s!r}")
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"not a rational number: {s!r}") from exc


def enc(x: Fraction) -> str:
    return fmt(rat(x))


def encode_set(S: IntervalSet) -> list[list[str]]:
    return [[enc(iv.lo), enc(iv.hi)] for iv in S]


def decode_set(data) -> IntervalSet:
    return IntervalSet([Interval(parse_rat(lo), parse_rat(hi)) for lo, hi in data])


def encode_affine(f: PiecewiseAffine) -> list[dict]:
    return [
        {"lo": enc(p.interval.lo), "hi": enc(p.interval.hi), "slope": enc(p.slope), "intercept": enc(p.intercept)}
        for p in f.pieces
    ]


def decode_affine(data) -> PiecewiseAffine:
    pieces = [
        AffinePiece(Interval(parse_rat(d["lo"]), parse_rat(d["hi"])), parse_rat(d.get("slope", "0")),
                    parse_rat(d["intercept"]))
        for d in data
    ]
    return PiecewiseAffine._make(pieces)


def encode_step(f: StepFunction) -> list[dict]:
    return [{"lo": enc(iv.lo), "hi": enc(iv.hi), "value": enc(v)} for iv, v in f.value_pieces]


def decode_step(data) -> StepFunction:
    return StepFunction([(parse_rat(d["lo"]), parse_rat(d["hi"]), parse_rat(d["value"])) for d in data])


def encode_exchange(T: IntervalExchange) -> dict:
    return {
        "domain": encode_set(T.domain),
        "pieces": [{"source": [enc(p.source.lo), enc(p.source.hi)], "target": [enc(p.target.lo), enc(p.target.hi)]}
                   for p in T.pieces],
    }


def decode_exchange(data) -> IntervalExchange:
    pieces = [
        ExchangePiece(Interval(*map(parse_rat, d["source"])), Interval(*map(parse_rat, d["target"])))
        for d in data["pieces"]
    ]
    return IntervalExchange(pieces, decode_set(data["domain"]))


def encode_hybrid(f: HybridFunction) -> dict:
    out: dict[str, Any] = {"step": encode_step(f.step_part)}
    sp = f.sampled_part
    if sp is not None:
        out["sampled"] = {"grid": [enc(x) for x in sp.grid], "values": [enc(v) for v in sp.values],
                          "lipschitz": enc(sp.lipschitz)}
    return out


def _polynomial(coeffs: list[Fraction]):
    def p(x):
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * x + c
        return acc
    return p


def decode_hybrid(data) -> HybridFunction:
    """Read ``{"step": [...], "sampled": {...}}``.

    The sampled part gives either an explicit ``grid`` list or
    ``{"lo", "hi", "steps"}``, and either ``values`` or ``polynomial``
    coefficients (constant term first).  A missing step part defaults to zero
    on the sampled range.
    """
    if not isinstance(data, dict):
        raise PreconditionError("function description must be a JSON object")
    sampled = None
    sd = data.get("sampled")
    if sd is not None:
        grid_d = sd.get("grid")
        if isinstance(grid_d, dict):
            lo, hi, steps = parse_rat(grid_d["lo"]), parse_rat(grid_d["hi"]), int(grid_d["steps"])
            if steps < 1:
                raise PreconditionError("grid needs at least one step")
            grid = [lo + (hi - lo) * i / steps for i in range(steps + 1)]
        elif isinstance(grid_d, list):
            grid = [parse_rat(x) for x in grid_d]
        else:
            raise PreconditionError("sampled part needs a grid")
        if "values" in sd:
            values = [parse_rat(v) for v in sd["values"]]
        elif "polynomial" in sd:
            p = _polynomial([parse_rat(c) for c in sd["polynomial"]])
            values = [p(x) for x in grid]
        else:
            raise PreconditionError("sampled part needs values or polynomial coefficients")
        sampled = SampledFunction(tuple(grid), tuple(values), parse_rat(sd.get("lipschitz", "0")))
    if "step" in data:
        step = decode_step(data["step"])
    elif sampled is not None:
        step = StepFunction([(sampled.grid[0], sampled.grid[-1], 0)])
    else:
        raise PreconditionError("function description has neither a step nor a sampled part")
    if sampled is not None:
        missing = sampled.support - step.domain
        if missing:
            raise PreconditionError(f"step part must cover the sampled range; missing {missing}")
    return HybridFunction(step, sampled)


def encode_block(b: BlockRecord) -> dict:
    return {
        "kind": b.kind,
        "domain": encode_set(b.domain) if isinstance(b.domain, IntervalSet) else str(b.domain),
        "solver": b.solver,
        "residual": enc(b.residual),
        "shift": enc(b.shift),
        "converged": b.converged,
        "detail": jsonable(b.detail),
    }


def decode_block(d) -> BlockRecord:
    return BlockRecord(d["kind"], decode_set(d["domain"]), d["solver"], parse_rat(d["residual"]),
                       parse_rat(d["shift"]), bool(d["converged"]), d.get("detail", {}))


def jsonable(x):
    """Recursively turn rationals, sets and tuples into JSON-ready values."""
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    if isinstance(x, Fraction):
        return enc(x)
    if isinstance(x, IntervalSet):
        return encode_set(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return str(x)


def encode_certificate(cert: CoboundaryCertificate, meta: dict | None = None) -> dict:
    out = {
        "format": FORMAT_VERSION,
        "f": encode_hybrid(cert.f),
        "T": encode_exchange(cert.T),
        "g": encode_affine(cert.g),
        "eps": enc(cert.eps),
        "exact": cert.exact,
        "residual_bound": enc(cert.residual_bound),
        "norm_ratio": enc(cert.norm_ratio),
        "modulus_bound": enc(cert.modulus_bound),
        "converged": cert.converged,
        "approximant": None if cert.approximant is None else encode_affine(cert.approximant),
        "blocks": [encode_block(b) for b in cert.blocks],
        "stage_ledger": jsonable(cert.stage_ledger),
    }
    if meta:
        out["meta"] = jsonable(meta)
    return out


def decode_certificate(data) -> CoboundaryCertificate:
    try:
        approx = data.get("approximant")
        return CoboundaryCertificate(
            f=decode_hybrid(data["f"]),
            T=decode_exchange(data["T"]),
            g=decode_affine(data["g"]),
            eps=parse_rat(data["eps"]),
            exact=bool(data["exact"]),
            residual_bound=parse_rat(data["residual_bound"]),
            norm_ratio=parse_rat(data["norm_ratio"]),
            approximant=None if approx is None else decode_affine(approx),
            modulus_bound=parse_rat(data.get("modulus_bound", "0")),
            converged=bool(data.get("converged", True)),
            blocks=[decode_block(b) for b in data.get("blocks", [])],
            stage_ledger=data.get("stage_ledger", []),
        )
    except (KeyError, TypeError, AttributeError, PreconditionError) as exc:
        raise MalformedCertificateError(f"malformed certificate: {exc}") from exc


def _encode_check(c: Check) -> dict:
    return {
        "passed": c.passed,
        "detail": c.detail,
        "worst_point": None if c.worst_point is None else enc(c.worst_point),
        "value": None if c.value is None else enc(c.value),
    }


def encode_report(r: VerificationReport, max_points: int = 10_000) -> dict:
    pts = r.exceptional_points
    return {
        "passed": r.passed,
        "identity_check": _encode_check(r.identity_check),
        "measure_check": _encode_check(r.measure_check),
        "norm_check": _encode_check(r.norm_check),
        "exceptional_point_count": len(pts),
        "exceptional_points": [enc(x) for x in pts[:max_points]],
    }


def encode_decomposition(dec) -> dict:
    return {
        "sign": dec.sign,
        "mean_shift": enc(dec.mean_shift),
        "D": encode_set(dec.D),
        "D_plus": encode_set(dec.D_plus),
        "D_minus": encode_set(dec.D_minus),
        "R_C": enc(dec.R_C),
        "C_block": encode_set(dec.C_block),
        "C1": encode_set(dec.C1),
        "C2": encode_set(dec.C2),
        "C2_plus": encode_set(dec.C2_plus),
        "C2_minus": encode_set(dec.C2_minus),
        "B0": encode_set(dec.B0),
        "R_B0": enc(dec.R_B0),
        "C2_tilde": encode_set(dec.C2_tilde),
        "blocks": [
            {"A": encode_set(b.A), "B": encode_set(b.B), "y": enc(b.y), "r_interval": [enc(b.r_interval[0]), enc(b.r_interval[1])]}
            for b in dec.blocks
        ],
        "root_residuals": jsonable(dec.root_residuals),
        "total_measure": enc(dec.total_measure()),
    }


def encode_tower_trace(sol) -> dict:
    tower = sol.tower
    levels = []
    for lvl in tower.levels:
        levels.append({
            "n": lvl.n,
            "m_prev": lvl.m_prev,
            "cells": len(lvl.cells),
            "cell_measure": enc(lvl.cell_measure),
            "eps_n": enc(lvl.eps_n),
            "residual": enc(lvl.residual),
            "oscillation": enc(lvl.oscillation),
            "diameter": enc(lvl.diameter),
            "boundaries": [encode_set(S) for S in lvl.cells],
        })
    stages = []
    for st, rec in zip(sol.stages, sol.ledger):
        stages.append({
            **jsonable(rec),
            "cycle": st.cycle,
            "matrix": jsonable(st.matrix),
            "sigma_rows": jsonable(st.sigma_rows),
            "b": jsonable(st.b),
            "sigma0": list(st.sigma0),
        })
    return {
        "base": encode_set(tower.base),
        "mode": tower.mode,
        "interface_points": [enc(x) for x in tower.interface_points],
        "levels": levels,
        "stages": stages,
        "residual": enc(sol.residual),
        "converged": sol.converged,
    }
