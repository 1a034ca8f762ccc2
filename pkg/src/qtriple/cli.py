"""``qtriple`` command line.

Exit status: 0 verified / success, 1 discrepancy found, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from typing import List, Optional, Sequence, Tuple

from . import reports
from .dsl import DSLExpression, DSLSyntaxError, EvalError, parse
from .numeric import DEFAULT_TOL, NonConvergenceError, NumericPoint, convergence_table, \
    product_with_stats, theta_with_stats
from .qfunctions import PoleError
from .series import SeriesContext, SeriesError
from .verifier import IdentityTask, default_window, run_chain, verify_identity

EXIT_OK, EXIT_DISCREPANCY, EXIT_USAGE = 0, 1, 2

DSL_HELP = """\
expression language:
  numbers 3, 3/4; variables z, q; + - * / ; powers x^k, x^-k (integer k)
  Pochhammer symbols (a;q)_n, (a;q)_-n, (a;q)_inf with a a monomial in z, q
  builtins theta() E() Einv() TP() S(m) Split(m) P(m)
  e.g. "(q;q)_inf*(-q/z;q)_inf*(-z;q)_inf"
"""


class UsageError(Exception):
    pass


def _default_order() -> int:
    raw = os.environ.get("QTRIPLE_DEFAULT_ORDER")
    if raw is None:
        return 24
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QTRIPLE_DEFAULT_ORDER must be an integer, got {raw!r}")


def parse_window(text: str) -> Tuple[int, int]:
    for sep in (",", ":", ".."):
        if sep in text:
            lo, hi = text.split(sep, 1)
            try:
                return int(lo), int(hi)
            except ValueError:
                break
    raise UsageError(f"window must look like LO,HI (e.g. -7,8), got {text!r}")


def parse_m_range(text: str) -> List[int]:
    out: List[int] = []
    try:
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"m must look like 3, 0..8 or 1,4,6, got {text!r}")
    if not out or any(m < 0 for m in out):
        raise UsageError("m values must be nonnegative and nonempty")
    return out


def parse_complex(text: str, name: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"--{name} must be a number like 0.3 or 0.2+0.1j, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qtriple",
        description="Exact q-series expansion and verification of the triple product "
                    "identity and the chain of equalities behind it.",
        epilog=DSL_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, numeric=False):
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
        if not numeric:
            sp.add_argument("--order", type=int, default=None,
                            help="target q-order (default 24 or $QTRIPLE_DEFAULT_ORDER)")
            sp.add_argument("--zwindow", default=None, metavar="LO,HI",
                            help="z-exponent window (default: holds every theta term)")

    sp = sub.add_parser("expand", help="expand an expression", epilog=DSL_HELP,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--expr", required=True)
    common(sp)

    sp = sub.add_parser("verify", help="check LHS = RHS through the target order",
                        epilog=DSL_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--lhs", required=True)
    sp.add_argument("--rhs", required=True)
    common(sp)

    sp = sub.add_parser("chain", help="verify the semi-finite chain for each m")
    sp.add_argument("--m", default="0..8", help="e.g. 3, 0..8 or 1,4,6")
    sp.add_argument("--jobs", type=int, default=1)
    common(sp)

    sp = sub.add_parser("eval", help="evaluate product and theta sides at a point")
    sp.add_argument("--q", required=True)
    sp.add_argument("--z", required=True)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common(sp, numeric=True)

    sp = sub.add_parser("converge", help="finite-m product vs theta residual per m")
    sp.add_argument("--q", required=True)
    sp.add_argument("--z", required=True)
    sp.add_argument("--m", default="0..20")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common(sp, numeric=True)
    return p


def _context(args) -> SeriesContext:
    order = _default_order() if args.order is None else args.order
    if order < 0:
        raise UsageError("--order must be >= 0")
    window = default_window(order) if args.zwindow is None else parse_window(args.zwindow)
    try:
        return SeriesContext(order, *window)
    except ValueError as exc:
        raise UsageError(str(exc))


def _expression(text: str) -> DSLExpression:
    return DSLExpression(text, parse(text))


def _csv(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_expand(args, out) -> int:
    ctx = _context(args)
    expr = _expression(args.expr)
    s = expr.build(ctx, ctx.q_order)
    if args.format == "json":
        d = reports.series_to_dict(s)
        d["expr"] = args.expr
        out.write(reports.emit(d) + "\n")
    elif args.format == "csv":
        out.write(_csv([(z, qe, reports.frac(c)) for (z, qe), c in s.graded_items()],
                       ("z", "q", "coeff")))
    else:
        out.write(f"# {args.expr}  (q-order {ctx.q_order}, window {list(ctx.window)}"
                  f"{', z-truncated' if s.z_truncated else ''})\n")
        if all(z == 0 for (z, _), _ in s.items()) and s.min_q >= 0:
            coeffs = [reports.frac(s.terms.get((0, k), 0)) for k in range(ctx.q_order + 1)]
            out.write("q-coefficients: " + ", ".join(coeffs) + "\n")
        for (z, qe), c in s.graded_items():
            out.write(f"q^{qe} z^{z}: {reports.frac(c)}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    ctx = _context(args)
    task = IdentityTask(_expression(args.lhs), _expression(args.rhs), ctx.q_order, ctx.window)
    report = verify_identity(task)
    if args.format == "json":
        out.write(reports.emit(reports.report_to_dict(report)) + "\n")
    elif args.format == "csv":
        d = report.first_discrepancy or ("", "", "", "")
        out.write(_csv([(report.verdict, report.working_order_used, *map(str, d))],
                       ("verdict", "working_order", "z_exp", "q_exp", "lhs_coeff", "rhs_coeff")))
    else:
        out.write(f"{report.verdict.upper()}: {args.lhs} vs {args.rhs}\n")
        out.write(f"  target order {report.target_order}, window {list(report.window)}, "
                  f"working order {report.working_order_used}, {report.wall_time:.3f}s\n")
        if report.first_discrepancy:
            z, qe, a, b = report.first_discrepancy
            out.write(f"  first discrepancy at z^{z} q^{qe}: lhs {a}, rhs {b}\n")
        for note in report.notes:
            out.write(f"  note: {note}\n")
    return EXIT_OK if report.passed else EXIT_DISCREPANCY


def cmd_chain(args, out) -> int:
    ctx = _context(args)
    ms = parse_m_range(args.m)
    results = run_chain(ms, ctx.q_order, ctx.window, jobs=max(1, args.jobs))
    ok = all(r.passed for r in results)
    if args.format == "json":
        out.write(reports.emit({
            "schema_version": reports.SCHEMA_VERSION,
            "order": ctx.q_order, "window": list(ctx.window), "passed": ok,
            "chains": [reports.chain_to_dict(r) for r in results]}) + "\n")
    elif args.format == "csv":
        rows = [(r.m, name, "equal" if passed else "discrepancy")
                for r in results for name, passed in r.rows()]
        out.write(_csv(rows, ("m", "check", "verdict")))
    else:
        for r in results:
            cells = "  ".join(f"{name}:{'ok' if passed else 'FAIL'}" for name, passed in r.rows())
            out.write(f"m={r.m:<3} {'PASS' if r.passed else 'FAIL'}  {cells}\n")
            for name, rep in list(r.edges.items()) + [("split=S0", r.split)]:
                if rep.first_discrepancy:
                    z, qe, a, b = rep.first_discrepancy
                    out.write(f"      {name} differs at z^{z} q^{qe}: {a} vs {b}\n")
        out.write(f"{'all chains verified' if ok else 'chain verification FAILED'} "
                  f"through q^{ctx.q_order}\n")
    return EXIT_OK if ok else EXIT_DISCREPANCY


def cmd_eval(args, out) -> int:
    try:
        point = NumericPoint(parse_complex(args.q, "q"), parse_complex(args.z, "z"), args.tol)
    except ValueError as exc:
        raise UsageError(str(exc))
    prod = product_with_stats(point)
    theta = theta_with_stats(point)
    diff = abs(prod.value - theta.value)
    # rounding grows with the size of the terms being summed
    allowed = 10 * point.tol * max(1.0, theta.magnitude)
    ok = diff < allowed
    if args.format == "json":
        out.write(reports.emit({
            "q": [point.q.real, point.q.imag], "z": [point.z.real, point.z.imag],
            "tol": point.tol, "product": [prod.value.real, prod.value.imag],
            "theta": [theta.value.real, theta.value.imag], "abs_diff": diff,
            "allowed": allowed, "factor_count": prod.factor_count,
            "term_count": theta.term_count, "agree": ok}) + "\n")
    elif args.format == "csv":
        out.write(_csv([(repr(point.q), repr(point.z), repr(prod.value), repr(theta.value),
                         f"{diff:.3e}", ok)],
                       ("q", "z", "product", "theta", "abs_diff", "agree")))
    else:
        out.write(f"product side : {prod.value:.15g}  ({prod.factor_count} factors)\n")
        out.write(f"theta side   : {theta.value:.15g}  ({theta.term_count} terms)\n")
        out.write(f"|difference| : {diff:.3e}  (allowed {allowed:.1e}, tol {point.tol:g})\n")
    return EXIT_OK if ok else EXIT_DISCREPANCY


def cmd_converge(args, out) -> int:
    q, z = parse_complex(args.q, "q"), parse_complex(args.z, "z")
    try:
        rows = convergence_table(q, z, parse_m_range(args.m), args.tol)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.format == "json":
        out.write(reports.emit(reports.convergence_to_dict(rows)) + "\n")
    elif args.format == "csv":
        out.write(_csv([(r.m, repr(r.residual), r.factor_count, r.term_count) for r in rows],
                       ("m", "residual", "factor_count", "term_count")))
    else:
        for r in rows:
            out.write(f"m={r.m:<4} residual={r.residual:.3e}  factors={r.factor_count}  "
                      f"terms={r.term_count}\n")
    return EXIT_OK


COMMANDS = {"expand": cmd_expand, "verify": cmd_verify, "chain": cmd_chain,
            "eval": cmd_eval, "converge": cmd_converge}


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except DSLSyntaxError as exc:
        text = next((t for t in (getattr(args, "expr", None), getattr(args, "lhs", None),
                                 getattr(args, "rhs", None)) if t is not None and _fails(t)), "")
        err.write(f"qtriple: syntax error: {exc}\n")
        if text:
            err.write(exc.caret(text) + "\n")
        return EXIT_USAGE
    except (UsageError, EvalError, PoleError, SeriesError, NonConvergenceError) as exc:
        err.write(f"qtriple: error: {exc}\n")
        return EXIT_USAGE


def _fails(text: str) -> bool:
    try:
        parse(text)
    except DSLSyntaxError:
        return True
    return False


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
