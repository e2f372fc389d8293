"""Command line front end.

    tsdelay solve SPEC [-o OUT]            solution table  t,x1..xd  on [alpha, gamma]
    tsdelay principal SPEC --zeta Z [-o]   principal solution  t,m11..mdd
    tsdelay represent SPEC [-o OUT]        variation-of-parameters table on [beta, gamma]
    tsdelay verify SPEC [--tol TOL]        representation vs. solver report
    tsdelay gridinfo SPEC [-o OUT]         t,sigma,rho,mu and point classes per grid point

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ProblemSpec, parse_config
from .errors import ExprError, ParseError, SolverError, TimeScaleError, ValidationError
from .solver import picard_solve, solve_global, solve_global_nonlinear, solve_steps
from .vop import Representation, verify_representation

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    return v if isinstance(v, str) else format(float(v), ".17g")


def write_table(header: Sequence[str], rows: Iterable[Sequence[float]], out) -> None:
    """CSV with a header row, 17 significant digits and LF line ends (strings pass through)."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _emit(args, header, rows) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_table(header, rows, fh)
    else:
        buf = io.StringIO()
        write_table(header, rows, buf)
        sys.stdout.write(buf.getvalue())


def _vector_rows(points, values):
    vals = np.asarray(values, dtype=float).reshape(len(points), -1)
    return [(t, *v) for t, v in zip(points, vals)]


def _load(path: str) -> ProblemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text)


def _solve(spec: ProblemSpec):
    o = spec.options
    if spec.kind == "linear":
        return solve_global(spec.to_system(), tol=o.tol, max_iter=o.max_iter)
    ivp = spec.to_ivp()
    method = o.method or ("envelope" if spec.envelope is not None else "steps")
    if method == "envelope":
        return solve_global_nonlinear(ivp, spec.growth(), tol=o.tol, max_iter=o.max_iter)
    if method == "local":
        return picard_solve(ivp, tol=o.tol, max_iter=o.max_iter)
    return solve_steps(ivp, tol=o.tol, max_iter=o.max_iter)


def cmd_solve(args) -> int:
    spec = _load(args.spec)
    sol = _solve(spec)
    d = spec.dim
    _emit(args, ["t"] + [f"x{k}" for k in range(1, d + 1)],
          _vector_rows(sol.points, sol.values.values))
    if sol.end < spec.gamma:
        print(f"note: local solution only reaches t={sol.end:g}", file=sys.stderr)
    return EXIT_OK


def cmd_principal(args) -> int:
    spec = _load(args.spec)
    sys_ = spec.to_system()
    ts = spec.timescale
    if args.zeta not in ts or not spec.beta - 1e-12 <= args.zeta <= spec.gamma + 1e-12:
        raise ValidationError(f"zeta={args.zeta:g} must be a time scale point in [beta, gamma]")
    rep = Representation(sys_, tol=spec.options.tol, max_iter=spec.options.max_iter)
    X = rep.principal(args.zeta)
    d = spec.dim
    header = ["t"] + [f"m{i}{k}" for i in range(1, d + 1) for k in range(1, d + 1)]
    _emit(args, header, _vector_rows(X.values.points, X.values.values))
    return EXIT_OK


def cmd_represent(args) -> int:
    spec = _load(args.spec)
    rep = Representation(spec.to_system(), tol=spec.options.tol, max_iter=spec.options.max_iter)
    pts = rep.layout.points[rep.layout.jb:]
    _emit(args, ["t"] + [f"x{k}" for k in range(1, spec.dim + 1)],
          _vector_rows(pts, rep.evaluate_all()))
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _load(args.spec)
    tol = args.tol if args.tol is not None else spec.options.verify_tol
    report = verify_representation(spec.to_system(), tol=tol, solver_tol=spec.options.tol)
    print(report)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_gridinfo(args) -> int:
    spec = _load(args.spec)
    ts = spec.timescale
    pts = ts.grid(spec.alpha, spec.gamma)
    rows = []
    for t in pts:
        c = ts.classify(t)
        rows.append((t, ts.sigma(t), ts.rho(t), ts.mu(t), c.left.value, c.right.value))
    _emit(args, ["t", "sigma", "rho", "mu", "left", "right"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tsdelay", description="Delay dynamic equations on time scales.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve the problem on [alpha, gamma]")
    s.add_argument("spec")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("principal", help="principal solution X(., zeta)")
    s.add_argument("spec")
    s.add_argument("--zeta", type=float, required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_principal)

    s = sub.add_parser("represent", help="variation-of-parameters evaluation")
    s.add_argument("spec")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_represent)

    s = sub.add_parser("verify", help="compare the representation with the solver")
    s.add_argument("spec")
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gridinfo", help="sigma, rho, mu and point classes")
    s.add_argument("spec")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gridinfo)
    return p


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except (ParseError, ValidationError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, TimeScaleError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run_command())
