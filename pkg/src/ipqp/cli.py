"""Command-line interface.

Subcommands: ``solve`` (one problem, one method), ``compare`` (both
methods side by side with a summary table), ``bench`` (θ-sweep over a
problem list, CSV output), and ``report`` (render figures from a trace
file).  Human-readable summaries go to standard output, traces and CSV
only to files, diagnostics to standard error.  Exit codes: 0 converged,
2 solver did not converge (or any bench row failed), 1 usage or parse
error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

from ._common import STATUS_CONVERGED, convergence_measures
from .config import LinearStrategy, SolverConfig
from .diagnostics import write_trace
from .explicit import solve_explicit
from .implicit import solve_implicit
from .inexact import solve_implicit_inexact
from .problem import QpProblem
from .qps import QpsParseError, load_problem, write_solution

__all__ = ["main", "build_parser"]

TRACE_LEVEL_ENV = "IPQP_TRACE_LEVEL"
DEFAULT_THETA = 0.5


class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors exit with status 1, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_solver_flags(p: argparse.ArgumentParser, with_method: bool) -> None:
    if with_method:
        p.add_argument("--method", choices=("explicit", "implicit"), default="implicit")
    p.add_argument("--linsolve", choices=("direct", "inexact", "minres"), default="direct")
    p.add_argument("--precision", choices=("f64", "f32"), default="f64")
    p.add_argument("--sigma", type=float, default=0.1, help="centering parameter in (0, 1]")
    p.add_argument("--theta", type=float, default=None, help="forcing term; requires --linsolve inexact (default 0.5)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--equilibrate", choices=("on", "off"), default="on")
    p.add_argument("--trace", default=None, metavar="PATH", help="trace output (.jsonl, or .csv for the flat table)")
    p.add_argument("--trace-level", choices=("basic", "spectrum"), default=None)
    p.add_argument("--out", default=None, metavar="PATH", help="solution JSON output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ipqp", description="Interior-point QP solver and benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one problem with one method")
    p_solve.add_argument("--problem", required=True, help="QPS path, qp_v1 JSON path, or builtin:<name>")
    _add_solver_flags(p_solve, with_method=True)
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="run both methods and print a summary table")
    p_cmp.add_argument("--problem", required=True, help="QPS path, qp_v1 JSON path, or builtin:<name>")
    _add_solver_flags(p_cmp, with_method=False)
    p_cmp.set_defaults(func=cmd_compare)

    p_bench = sub.add_parser("bench", help="θ-sweep benchmark over a problem list, CSV output")
    p_bench.add_argument("--problems", required=True, nargs="+", metavar="SRC",
                         help="QPS files, directories of .qps files, or builtin:<name> (commas allowed)")
    p_bench.add_argument("--theta-sweep", default="0.5", metavar="LIST", help="comma-separated θ values")
    p_bench.add_argument("--precision", choices=("f64", "f32"), default="f64")
    p_bench.add_argument("--sigma", type=float, default=0.1)
    p_bench.add_argument("--tol", type=float, default=1e-9)
    p_bench.add_argument("--max-iters", type=int, default=200)
    p_bench.add_argument("--equilibrate", choices=("on", "off"), default="on")
    p_bench.add_argument("--out", required=True, metavar="PATH", help="CSV output path")
    p_bench.set_defaults(func=cmd_bench)

    p_rep = sub.add_parser("report", help="render figures and a CSV table from a trace file")
    p_rep.add_argument("--trace", required=True, metavar="PATH", help="trace JSONL produced by solve/compare")
    p_rep.add_argument("--out-dir", default=None, metavar="DIR", help="output directory (default: next to the trace)")
    p_rep.set_defaults(func=cmd_report)

    return parser


def _trace_level(args, parser: argparse.ArgumentParser) -> str:
    if args.trace_level is not None:
        return args.trace_level
    level = os.environ.get(TRACE_LEVEL_ENV)
    if level is None:
        return "basic"
    if level not in ("basic", "spectrum"):
        parser.error(f"{TRACE_LEVEL_ENV} must be 'basic' or 'spectrum', got {level!r}")
    return level


def _build_config(args, parser: argparse.ArgumentParser, linsolve: str) -> SolverConfig:
    if args.theta is not None and linsolve != "inexact":
        parser.error("--theta requires --linsolve inexact")
    theta = DEFAULT_THETA if args.theta is None else args.theta
    try:
        linear = LinearStrategy(
            kind="minres" if linsolve == "minres" else "direct",
            precision=args.precision,
        )
        return SolverConfig(
            sigma=args.sigma,
            tol=args.tol,
            max_iters=args.max_iters,
            theta=theta,
            linear=linear,
            trace_level=_trace_level(args, parser),
            equilibrate=args.equilibrate == "on",
        )
    except ValueError as exc:
        parser.error(str(exc))


def _load(source: str) -> QpProblem:
    try:
        return load_problem(source)
    except (QpsParseError, ValueError, OSError) as exc:
        print(f"ipqp: error: {exc}", file=sys.stderr)
        raise SystemExit(1) from exc


_SOLVERS = {
    ("explicit", "direct"): solve_explicit,
    ("explicit", "minres"): solve_explicit,
    ("implicit", "direct"): solve_implicit,
    ("implicit", "minres"): solve_implicit,
    ("implicit", "inexact"): solve_implicit_inexact,
}


def _run(solver, problem, config):
    start = time.perf_counter()
    z, trace = solver(problem, config)
    return z, trace, time.perf_counter() - start


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".6e")
    return str(value)


def _summary_fields(problem, z, trace, seconds) -> list[tuple[str, object]]:
    _, r_inf, gap = convergence_measures(problem, z.x, z.lam, z.gamma, z.s)
    fields = [
        ("status", trace.status),
        ("iterations", trace.iterations),
        ("factorizations", trace.factorizations()),
        ("krylov_total", trace.total_krylov_iters()),
        ("objective", problem.objective(z.x)),
        ("final_r_inf", r_inf),
        ("final_gap", gap),
        ("time_s", seconds),
    ]
    conds = [r.cond for r in trace.records if r.cond is not None]
    if conds:
        fields.append(("cond_max", max(conds)))
        fields.append(("cond_ratio", max(conds) / min(conds)))
    return fields


def cmd_solve(args, parser: argparse.ArgumentParser) -> int:
    if args.method == "explicit" and args.linsolve == "inexact":
        parser.error("--linsolve inexact applies only to --method implicit")
    config = _build_config(args, parser, args.linsolve)
    problem = _load(args.problem)
    solver = _SOLVERS[(args.method, args.linsolve)]
    try:
        z, trace, seconds = _run(solver, problem, config)
    except (ValueError, OverflowError) as exc:
        print(f"ipqp: error: {exc}", file=sys.stderr)
        return 1
    if args.trace:
        write_trace(trace, args.trace)
    if args.out:
        write_solution(z, problem, args.out, trace.status)
    name = problem.name or args.problem
    print(f"problem         {name} (n={problem.n}, m={problem.m}, p={problem.p})")
    print(f"method          {args.method} linsolve={args.linsolve} precision={args.precision}")
    for key, value in _summary_fields(problem, z, trace, seconds):
        print(f"{key:<15} {_fmt(value)}")
    return 0 if trace.status == STATUS_CONVERGED else 2


def _suffixed(path: str, tag: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{tag}{p.suffix}"))


def cmd_compare(args, parser: argparse.ArgumentParser) -> int:
    if args.linsolve == "inexact":
        parser.error("--linsolve inexact applies only to the implicit method; use 'ipqp solve' or 'ipqp bench'")
    config = _build_config(args, parser, args.linsolve)
    problem = _load(args.problem)
    columns: dict[str, list[tuple[str, object]]] = {}
    statuses = []
    for method in ("explicit", "implicit"):
        solver = _SOLVERS[(method, args.linsolve)]
        try:
            z, trace, seconds = _run(solver, problem, config)
        except (ValueError, OverflowError) as exc:
            print(f"ipqp: error: {method}: {exc}", file=sys.stderr)
            return 1
        if args.trace:
            write_trace(trace, _suffixed(args.trace, method))
        if args.out:
            write_solution(z, problem, _suffixed(args.out, method), trace.status)
        columns[method] = _summary_fields(problem, z, trace, seconds)
        statuses.append(trace.status)
    name = problem.name or args.problem
    print(f"problem         {name} (n={problem.n}, m={problem.m}, p={problem.p})")
    print(f"linsolve        {args.linsolve} precision={args.precision}")
    keys = [k for k, _ in columns["explicit"]]
    for k, _ in columns["implicit"]:
        if k not in keys:
            keys.append(k)
    lookup = {m: dict(fields) for m, fields in columns.items()}
    print(f"{'metric':<15} {'explicit':>14} {'implicit':>14}")
    for key in keys:
        left = _fmt(lookup["explicit"].get(key, ""))
        right = _fmt(lookup["implicit"].get(key, ""))
        print(f"{key:<15} {left:>14} {right:>14}")
    return 0 if all(s == STATUS_CONVERGED for s in statuses) else 2


def _expand_problems(tokens: list[str], parser: argparse.ArgumentParser) -> list[str]:
    sources: list[str] = []
    for token in tokens:
        for part in token.split(","):
            part = part.strip()
            if not part:
                continue
            if part.startswith("builtin:"):
                sources.append(part)
            elif os.path.isdir(part):
                found = sorted(str(p) for p in Path(part).glob("*.qps"))
                if not found:
                    parser.error(f"no .qps files in directory {part!r}")
                sources.extend(found)
            else:
                sources.append(part)
    if not sources:
        parser.error("empty problem list")
    return sources


BENCH_COLUMNS = ("problem", "theta", "status", "iterations", "factorizations", "wall_time_s", "final_gap")


def cmd_bench(args, parser: argparse.ArgumentParser) -> int:
    sources = _expand_problems(args.problems, parser)
    try:
        thetas = [float(tok) for tok in args.theta_sweep.split(",") if tok.strip()]
    except ValueError:
        parser.error(f"--theta-sweep must be a comma-separated list of numbers, got {args.theta_sweep!r}")
    if not thetas:
        parser.error("--theta-sweep is empty")
    rows: list[dict[str, object]] = []
    failures = 0
    for source in sources:
        try:
            problem = load_problem(source)
            label = problem.name or Path(source).stem
        except (QpsParseError, ValueError, OSError) as exc:
            print(f"ipqp: error: {source}: {exc}", file=sys.stderr)
            failures += len(thetas)
            rows.extend(
                {"problem": source, "theta": theta, "status": "error",
                 "iterations": "", "factorizations": "", "wall_time_s": "", "final_gap": ""}
                for theta in thetas
            )
            continue
        for theta in thetas:
            try:
                config = SolverConfig(
                    sigma=args.sigma,
                    tol=args.tol,
                    max_iters=args.max_iters,
                    theta=theta,
                    linear=LinearStrategy(kind="direct", precision=args.precision),
                    equilibrate=args.equilibrate == "on",
                )
                z, trace, seconds = _run(solve_implicit_inexact, problem, config)
            except (ValueError, OverflowError) as exc:
                print(f"ipqp: error: {label} θ={theta}: {exc}", file=sys.stderr)
                failures += 1
                rows.append({"problem": label, "theta": theta, "status": "error",
                             "iterations": "", "factorizations": "", "wall_time_s": "", "final_gap": ""})
                continue
            if trace.status != STATUS_CONVERGED:
                failures += 1
            _, _, gap = convergence_measures(problem, z.x, z.lam, z.gamma, z.s)
            rows.append({
                "problem": label,
                "theta": theta,
                "status": trace.status,
                "iterations": trace.iterations,
                "factorizations": trace.factorizations(),
                "wall_time_s": seconds,
                "final_gap": gap,
            })
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if failures:
        print(f"ipqp: {failures} of {len(rows)} runs failed", file=sys.stderr)
        return 2
    return 0


def cmd_report(args, parser: argparse.ArgumentParser) -> int:
    from .report import render_report  # deferred: solve paths never pull in matplotlib

    try:
        written = render_report(args.trace, args.out_dir)
    except (OSError, ValueError) as exc:
        print(f"ipqp: error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1


if __name__ == "__main__":
    raise SystemExit(main())
