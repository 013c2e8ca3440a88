"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 resource
limit (including a tower that ran out of depth before reaching delta).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

from .errors import CoboundaryError, ResourceLimitError, UndefinedPointError
from .pipeline import decompose_domain, solve_full
from .rearrange import prefix_sums, rearrange_matrix, rearrange_zero_sum
from .serialize import (
    decode_certificate,
    decode_hybrid,
    enc,
    encode_certificate,
    encode_decomposition,
    encode_report,
    encode_tower_trace,
    jsonable,
    parse_rat,
)
from .tower import run_tower
from .verify import orbit, verify_certificate

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


@dataclass
class ProblemSpec:
    f: object
    eps: Fraction
    delta: Fraction
    depth_max: int
    mode: str
    seed: int
    tolerance: Fraction


def load_json(path: str):
    if path == "-":
        return json.load(sys.stdin)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_problem(path: str, args) -> ProblemSpec:
    data = load_json(path)
    if not isinstance(data, dict):
        raise ValueError("problem spec must be a JSON object")
    f = decode_hybrid(data.get("function", data))

    def pick(flag, key, default, conv):
        v = getattr(args, flag, None)
        if v is not None:
            return conv(v)
        return conv(data[key]) if key in data else conv(default)

    return ProblemSpec(
        f=f,
        eps=pick("epsilon", "epsilon", "1/10", parse_rat),
        delta=pick("delta", "delta", "1/1000", parse_rat),
        depth_max=pick("depth_max", "depth_max", 16, int),
        mode=pick("mode", "mode", "exact", str),
        seed=pick("seed", "seed", 0, int),
        tolerance=pick("tolerance", "tolerance", "1/1000000000", parse_rat),
    )


def write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def decimal_str(x: Fraction, digits: int) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        return str(+(Decimal(x.numerator) / Decimal(x.denominator)))


def cmd_solve(args) -> int:
    spec = load_problem(args.spec, args)
    cert = solve_full(spec.f, spec.eps, spec.delta, spec.depth_max, spec.mode, spec.tolerance)
    meta = {"epsilon": spec.eps, "delta": spec.delta, "depth_max": spec.depth_max, "mode": spec.mode,
            "seed": spec.seed, "tolerance": spec.tolerance}
    write_json(encode_certificate(cert, meta), args.output)
    return EXIT_OK if cert.converged else EXIT_RESOURCE


def cmd_verify(args) -> int:
    cert = decode_certificate(load_json(args.certificate))
    tol = parse_rat(args.tolerance) if args.tolerance is not None else Fraction(0)
    report = verify_certificate(cert, "numeric" if args.numeric else "exact", tol)
    write_json(encode_report(report), args.output)
    if not report.passed:
        for name in ("identity_check", "measure_check", "norm_check"):
            check = getattr(report, name)
            if not check.passed:
                print(f"{name}: {check.detail}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_decompose(args) -> int:
    spec = load_problem(args.spec, args)
    write_json(encode_decomposition(decompose_domain(spec.f, spec.tolerance)), args.output)
    return EXIT_OK


def cmd_tower_trace(args) -> int:
    spec = load_problem(args.spec, args)
    sol = run_tower(spec.f.domain, spec.f.reference(), spec.eps, spec.delta, spec.depth_max, spec.mode,
                    tol=spec.tolerance)
    write_json(encode_tower_trace(sol), args.output)
    return EXIT_OK if sol.converged else EXIT_RESOURCE


def _parse_row(text: str) -> list[Fraction]:
    return [parse_rat(x) for x in text.split(",") if x.strip()]


def cmd_rearrange(args) -> int:
    if (args.vector is None) == (args.matrix is None):
        raise ValueError("give exactly one of --vector and --matrix")
    if args.vector is not None:
        a = _parse_row(args.vector)
        perm = rearrange_zero_sum(a)
        out = {"vector": a, "permutation": list(perm), "partial_sums": prefix_sums(a, perm),
               "bound": max((abs(x) for x in a), default=Fraction(0))}
    else:
        A = [_parse_row(row) for row in args.matrix.split(";")]
        res = rearrange_matrix(A)
        out = {"matrix": A, "permutations": [list(p) for p in res.perms], "tiers": res.tiers,
               "C": res.bound, "bound": 2 * res.bound, "column_partials": res.column_partials(A)}
    write_json(jsonable(out), args.output)
    return EXIT_OK


def _open_csv(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def cmd_orbit(args) -> int:
    cert = decode_certificate(load_json(args.certificate))
    points, notice = orbit(cert.T, parse_rat(args.x), args.steps)
    fh, close = _open_csv(args.output)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "x"])
        for i, x in enumerate(points):
            w.writerow([i, enc(x)])
    finally:
        if close:
            fh.close()
    if notice:
        print(notice, file=sys.stderr)
    return EXIT_OK


def cmd_export(args) -> int:
    cert = decode_certificate(load_json(args.certificate))
    f, T, g = cert.f.reference(), cert.T, cert.g
    dom = cert.f.domain
    lo, hi = dom.inf, dom.sup
    n = args.points
    if n < 1:
        raise ValueError("--points must be positive")
    fh, close = _open_csv(args.output)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f", "g", "displacement"])
        for i in range(n):
            x = lo + (hi - lo) * Fraction(i, n)
            if x not in dom:
                continue
            row = [x, f(x), g(x), T(x) - x]
            w.writerow([decimal_str(v, args.precision) for v in row])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coboundary", description="Exact coboundary solver for bounded mean-zero functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def problem_flags(p):
        p.add_argument("spec", help="problem JSON file ('-' for stdin)")
        p.add_argument("--epsilon", help="norm slack, e.g. 1/10")
        p.add_argument("--delta", help="residual target, e.g. 1/1000")
        p.add_argument("--depth-max", dest="depth_max", type=int)
        p.add_argument("--mode", choices=["exact", "faithful"])
        p.add_argument("--seed", type=int)
        p.add_argument("--tolerance", help="root-finding tolerance for sampled parts")
        p.add_argument("--output", "-o")

    p = sub.add_parser("solve", help="solve and write a certificate")
    problem_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a certificate")
    p.add_argument("certificate")
    p.add_argument("--numeric", action="store_true", help="also check raw grid samples")
    p.add_argument("--tolerance")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("decompose", help="write the block decomposition")
    problem_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("tower-trace", help="run the tower on the whole domain and dump levels and stages")
    problem_flags(p)
    p.set_defaults(func=cmd_tower_trace)

    p = sub.add_parser("lemma-rearrange", help="bounded-prefix rearrangement of a vector or matrix")
    p.add_argument("--vector", help='comma-separated entries, e.g. "2,-1,-1"')
    p.add_argument("--matrix", help='rows separated by ";", e.g. "1,-1;-1,1"')
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("orbit", help="orbit of a point under a certificate's T (CSV)")
    p.add_argument("certificate")
    p.add_argument("--x", required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("export", help="sample f, g and T(x) - x on a grid (CSV)")
    p.add_argument("certificate")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--precision", type=int, default=12, help="significant digits")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (CoboundaryError, ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        if isinstance(exc, UndefinedPointError):
            print(f"undefined point: {exc}", file=sys.stderr)
        else:
            print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
