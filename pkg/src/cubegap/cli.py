"""Command-line entry point: ``cubegap <command> ...``.

Exit codes: 0 success, 1 usage or input error, 2 size guard, 3 flow saturation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import certify, exact, fourier, gwplus, sdp
from .core import (
    CubeError,
    GuardError,
    assignment_value,
    delta_instance,
    parse_assignment,
    parse_instance,
    serialize_assignment,
    serialize_instance,
    tensor_product,
)

CSV_HEADER = "d,k,comb,sdp_analytic,sdp_solved,gwplus,cert_bound,ell,t_total_s"
REPORT_MAX_RANK = 32


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt_float(x: float) -> str:
    return format(x, ".12g")


def fmt_frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected K,D got {text!r}") from None
    return a, b


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CubeError(f"cannot read {path}: {exc.strerror}") from exc


def _emit(text: str, path: str | None) -> None:
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _solver_params(args) -> sdp.SolverParams:
    return sdp.SolverParams(rank=args.rank, max_sweeps=args.max_sweeps, tol=args.tol,
                            seed=args.seed, restarts=args.restarts)


# -- commands -----------------------------------------------------------------

def cmd_gen(args):
    _emit(serialize_instance(delta_instance(args.k, args.d)), args.output)


def cmd_tensor(args):
    a, b = parse_instance(_read(args.first)), parse_instance(_read(args.second))
    _emit(serialize_instance(tensor_product(a, b)), args.output)


def cmd_eval(args):
    inst, a = parse_instance(_read(args.instance)), parse_assignment(_read(args.assignment))
    print(fmt_frac(assignment_value(inst, a)))


def cmd_exact(args):
    inst = parse_instance(_read(args.instance))
    if args.structured:
        k, d = args.structured
        if d != inst.d or delta_instance(k, d) != inst:
            raise CubeError(f"instance is not delta({k},{d})")
        if d - k > exact.MAX_BRUTE_DIM:
            raise GuardError(f"structured search is limited to d-k <= {exact.MAX_BRUTE_DIM}")
        print(fmt_frac(exact.structured_delta_opt(k, d)))
        return
    value, a = exact.brute_force_opt(inst)
    print(fmt_frac(value))
    if args.output:
        _emit(serialize_assignment(a), args.output)


def cmd_sdp_solve(args):
    inst = parse_instance(_read(args.instance))
    params = _solver_params(args)
    if args.triangles:
        res = gwplus.solve_gwplus(inst, params, args.vtol)
        print(fmt_float(res.value), fmt_float(res.max_violation))
        sol = res.solution
    else:
        res = sdp.solve_gw(inst, params)
        print(fmt_float(res.value))
        sol = res.solution
    if args.output:
        _emit(sdp.serialize_solution(sol), args.output)


def cmd_sdp_analytic(args):
    value, _ = sdp.analytic_delta_value(args.k, args.d, args.t)
    print(fmt_float(value))
    if args.output:
        _emit(sdp.serialize_solution(sdp.analytic_solution(args.k, args.d, args.t)), args.output)


def cmd_round(args):
    inst = parse_instance(_read(args.instance))
    sol = sdp.parse_solution(_read(args.solution))
    a, value = sdp.hyperplane_round(inst, sol, args.trials, args.seed)
    print(fmt_frac(value))
    if args.output:
        _emit(serialize_assignment(a), args.output)


def cmd_certify(args):
    if args.delta:
        k, d = args.delta
        cert = certify.delta_certificates(k, d, args.ell)
        inst = delta_instance(k, d)
    else:
        inst = parse_instance(_read(args.faces))
        cert = certify.greedy_face_packing(inst)
    ok, why = certify.verify_certificates(inst, cert)
    if not ok:
        raise AssertionError(f"constructed certificates failed verification: {why}")
    bound = certify.certificate_bound(inst, cert)
    if args.output:
        _emit(certify.serialize_certificates(cert), args.output)
        print(fmt_frac(bound))
    else:
        print(certify.serialize_certificates(cert))


def cmd_fourier(args):
    if args.samples is None and args.d > 4:
        args.samples = 10**5
    sweep = fourier.sweep_claim(args.d, args.samples, args.seed)
    if args.d > 15:
        raise GuardError("Fourier facts are limited to d <= 15")
    facts = fourier.check_fourier_facts(args.d)
    out = {"d": args.d, "min_slack": sweep["min_slack"], "argmin_f": sweep["argmin_f"],
           "functions": sweep["functions"], "exhaustive": sweep["exhaustive"], "seed": sweep["seed"],
           "facts": facts["facts"], "all_inequalities_pass": facts["all_inequalities_pass"]}
    print(json.dumps(out, indent=2))


def gap_row(k: int, d: int, seed: int = 0, rank: int | None = None, timing: bool = False,
            log=None) -> str:
    """One CSV row for delta(k, d); fields that a size guard rules out are "n/a"."""
    stage = {}
    t0 = time.perf_counter()

    def mark(name):
        nonlocal t0
        now = time.perf_counter()
        stage[name] = now - t0
        t0 = now

    m = d - k
    comb = "n/a"
    if m <= exact.MAX_BRUTE_DIM:
        comb_q = exact.structured_delta_opt(k, d)
        comb = fmt_frac(comb_q)
    mark("comb")
    analytic, _ = sdp.analytic_delta_value(k, d)
    mark("sdp_analytic")
    if d <= sdp.MAX_MATERIALIZED_DIM:
        inst = delta_instance(k, d)
        r = rank if rank is not None else min(sdp.default_rank(inst.n_vertices), REPORT_MAX_RANK)
        solved = sdp.solve_gw(inst, sdp.SolverParams(rank=r, seed=seed)).value
    else:
        inst = None
        r = rank if rank is not None else REPORT_MAX_RANK
        solved = sdp.solve_gw_layered(k, d, sdp.SolverParams(rank=r, seed=seed)).value
    mark("sdp_solved")
    gwp = "n/a"
    if inst is not None and inst.n_vertices <= gwplus.MAX_GWPLUS_VERTICES:
        gwp = fmt_float(gwplus.solve_gwplus(inst, sdp.SolverParams(rank=r, seed=seed)).value)
    mark("gwplus")
    ell, bound = "n/a", None
    if inst is not None:
        if m % 2 == 1:
            cert = certify.delta_certificates(k, d)
            ell = str(cert.ell)
        else:
            cert = certify.greedy_face_packing(inst)
        bound = certify.certificate_bound(inst, cert)
    mark("cert_bound")
    total = sum(stage.values())
    if log is not None:
        log.write(" ".join(f"{name}={sec:.3f}s" for name, sec in stage.items()) + "\n")
    fields = [str(d), str(k), comb, fmt_float(analytic), fmt_float(solved), gwp,
              "n/a" if bound is None else fmt_frac(bound), ell, f"{total:.3f}" if timing else "n/a"]
    return ",".join(fields)


def cmd_report(args):
    row = gap_row(args.k, args.d, args.seed, args.rank, args.timing, log=sys.stderr)
    _emit(CSV_HEADER + "\n" + row, args.output)


# -- parser -------------------------------------------------------------------

def _add_solver_flags(p):
    p.add_argument("--rank", type=int, default=None, help="factorization rank (default ceil(sqrt(2n))+1)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-sweeps", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cubegap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate an instance")
    gen_sub = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    g = gen_sub.add_parser("delta", help="the delta(k, d) instance")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    p = sub.add_parser("tensor", help="tensor product of two instances")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_tensor)

    p = sub.add_parser("eval", help="unsatisfied fraction of an assignment")
    p.add_argument("instance")
    p.add_argument("assignment")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("exact", help="exact combinatorial optimum")
    p.add_argument("instance")
    p.add_argument("--structured", type=_pair, metavar="K,D", help="use the subcube reduction for delta(K,D)")
    p.add_argument("-o", "--output", help="write an optimal assignment (brute force only)")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("sdp", help="vector relaxation")
    sdp_sub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = sdp_sub.add_parser("solve", help="numerical solve; prints the objective")
    s.add_argument("instance")
    _add_solver_flags(s)
    s.add_argument("--triangles", action="store_true", help="add triangle inequalities; also prints max violation")
    s.add_argument("--vtol", type=float, default=1e-6)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sdp_solve)
    s = sdp_sub.add_parser("analytic", help="value of the explicit planar solution for delta(k, d)")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--t", type=float, default=None, help="band half-width (default sqrt((d-k)/k))")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sdp_analytic)

    p = sub.add_parser("round", help="random hyperplane rounding")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("certify", help="edge-disjoint inconsistent cycles")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--delta", type=_pair, metavar="K,D")
    grp.add_argument("--faces", metavar="INSTANCE")
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("-o", "--output", help="write the certificate JSON here and print the bound")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("fourier", help="Fourier checks")
    f_sub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    f = f_sub.add_parser("check-claim", help="minority inequality sweep plus Fourier facts")
    f.add_argument("--d", type=int, required=True)
    f.add_argument("--samples", type=int, default=None)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fourier)

    p = sub.add_parser("report", help="experiment reports")
    r_sub = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    r = r_sub.add_parser("gap", help="one CSV row of bounds for delta(k, d)")
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--rank", type=int, default=None, help=f"solver rank (default: rank rule capped at {REPORT_MAX_RANK})")
    r.add_argument("--timing", action="store_true", help="fill t_total_s (makes output run-dependent)")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "certify" and args.ell is not None and args.faces:
            raise UsageError("--ell only applies to --delta")
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except certify.SaturationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CubeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
