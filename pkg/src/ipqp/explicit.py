"""Standard explicit primal-dual interior-point solver.

The baseline formulation: each iteration linearizes the relaxed KKT
conditions in (x, lambda, gamma, s), condenses the slack row into the
symmetric saddle-point matrix

    E(lambda, s) = [ Q    -A'          -C' ]
                   [ -A   -inv(L) S     0  ]
                   [ -C    0            0  ],

solves for (dx, dlambda, dgamma), recovers ds from the inequality row,
and takes a fraction-to-boundary damped step with a backtracking line
search on the relaxed-residual norm.  The (2,2) diagonal -s/lambda is
the only part of E that changes between iterations — and it degenerates
as complementarity pairs split toward (0, s) or (lambda, 0), which is
exactly what the implicit formulation avoids.
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np
import scipy.sparse as sp

from ._common import (
    STATUS_CONVERGED,
    STATUS_MAX_ITERS,
    STATUS_STALLED,
    Direction,
    StepReport,
    backtrack_from,
    build_record,
    convergence_measures,
    equality_newton_step,
    initial_primal,
    max_step_to_boundary,
    solve_linear,
)
from .config import FRACTION_TO_BOUNDARY, MU_FLOOR, LinearStrategy, SolverConfig
from .diagnostics import SolveTrace, TraceHeader, record_iteration
from .linalg import SparseSymmetric
from .problem import ExplicitIterate, QpProblem, ResidualVector, residuals
from .scaling import ScalingState, ruiz_equilibrate, unscale_solution

__all__ = ["ExplicitKkt", "assemble_explicit", "explicit_step", "solve_explicit"]


@dataclasses.dataclass
class ExplicitKkt:
    """Condensed KKT system E(lambda, s) dz = rhs for one iteration.

    Attributes:
        matrix: E(lambda, s), symmetric indefinite.
        rhs: (-r_x, r_i + r_comp/lambda, r_e) stacked, binary64.
        slack_diag: s/lambda — the mutable (2,2) diagonal magnitude,
            kept in binary64 for matrix-delta diagnostics.
        residual: the mu-relaxed residual the system was built from.
        dims: (n, m, p).
    """

    matrix: SparseSymmetric
    rhs: np.ndarray
    slack_diag: np.ndarray
    residual: ResidualVector
    dims: tuple[int, int, int]


def assemble_explicit(
    problem: QpProblem,
    z: ExplicitIterate,
    mu: float,
    kkt: ExplicitKkt | None = None,
    precision: str = "f64",
) -> ExplicitKkt:
    """Assemble (or refresh in place) the condensed KKT system.

    Passing the previous iteration's ``kkt`` reuses its matrix storage:
    only the m entries of the (2,2) diagonal are overwritten, since the
    rest of E never changes on a fixed problem.

    Raises:
        ValueError: iterate not strictly interior (some lambda or s <= 0).
    """
    lam = np.asarray(z.lam, dtype=np.float64)
    s = np.asarray(z.s, dtype=np.float64)
    if np.any(lam <= 0.0) or np.any(s <= 0.0):
        raise ValueError("interior violated: lambda and s must stay strictly positive")
    n, m, p = problem.n, problem.m, problem.p
    res = residuals(problem, z, mu)
    slack_diag = s / lam
    rhs = np.concatenate([-res.r_x, res.r_i + res.r_comp / lam, res.r_e])
    if kkt is not None:
        kkt.matrix.update_diagonal(-slack_diag, start=n)
        kkt.slack_diag = slack_diag
        kkt.rhs = rhs
        kkt.residual = res
        return kkt
    blocks: list[list] = [[problem.Q]]
    if m:
        blocks[0].append(-problem.A.T)
    if p:
        blocks[0].append(-problem.C.T)
    if m:
        row: list = [-problem.A, sp.diags(-slack_diag, format="csc")]
        if p:
            row.append(None)
        blocks.append(row)
    if p:
        row = [-problem.C]
        if m:
            row.append(None)
        row.append(sp.csc_matrix((p, p)))
        blocks.append(row)
    full = sp.bmat(blocks, format="csc") if len(blocks) > 1 or len(blocks[0]) > 1 else problem.Q.tocsc()
    reg_signs = np.concatenate([np.ones(n), -np.ones(m + p)])
    matrix = SparseSymmetric.from_full(full, precision=precision, reg_signs=reg_signs)
    return ExplicitKkt(matrix=matrix, rhs=rhs, slack_diag=slack_diag, residual=res, dims=(n, m, p))


def explicit_step(
    problem: QpProblem,
    z: ExplicitIterate,
    mu: float,
    strategy: LinearStrategy = LinearStrategy(),
    kkt: ExplicitKkt | None = None,
) -> tuple[Direction, StepReport]:
    """Compute one Newton direction for the explicit formulation.

    Solves the condensed system for (dx, dlambda, dgamma) and recovers
    ds = A dx + r_i from the linearized inequality row, so that row
    holds exactly.  The report carries the relative residual of the full
    linearized system, evaluated in binary64 against the original data.
    """
    if kkt is None:
        kkt = assemble_explicit(problem, z, mu, precision=strategy.precision)
    n, m, p = kkt.dims
    blocks = [(0, n), (n, n + m), (n + m, n + m + p)]
    solution, krylov_report, factorization = solve_linear(kkt.matrix, kkt.rhs, strategy, blocks)
    dx = solution[:n]
    dlam = solution[n : n + m]
    dgamma = solution[n + m :]
    res = kkt.residual
    ds = problem.A @ dx + res.r_i
    direction = Direction(x=dx, lam=dlam, gamma=dgamma, s=ds, v=None)
    rows = (
        problem.Q @ dx - problem.A.T @ dlam - problem.C.T @ dgamma + res.r_x,
        problem.A @ dx - ds + res.r_i,
        problem.C @ dx + res.r_e,
        np.asarray(z.s) * dlam + np.asarray(z.lam) * ds + res.r_comp,
    )
    scale = max(res.inf_norm, np.finfo(np.float64).tiny)
    rel = max(float(np.max(np.abs(row), initial=0.0)) for row in rows) / scale
    report = StepReport(
        factorized=strategy.kind == "direct",
        krylov_iters=krylov_report.iterations if krylov_report else 0,
        linearized_residual=rel,
        inertia=factorization.inertia if factorization else None,
        regularization=factorization.regularization if factorization else 0.0,
        krylov=krylov_report,
    )
    return direction, report


def _trace_header(problem: QpProblem, config: SolverConfig) -> TraceHeader:
    return TraceHeader(
        method="explicit",
        linear_strategy=config.linear.kind,
        precision=config.linear.precision,
        sigma=config.sigma,
        theta=None,
        tol=config.tol,
        problem=problem.name or "unnamed",
        equilibrate=config.equilibrate,
        trace_level=config.trace_level,
    )


def solve_explicit(problem: QpProblem, config: SolverConfig = SolverConfig()) -> tuple[ExplicitIterate, SolveTrace]:
    """Solve a QP with the explicit interior-point method.

    Equilibrates (unless disabled), iterates Newton steps with
    fraction-to-boundary damping and a backtracking line search on the
    relaxed-residual infinity norm, and terminates when
    max(unrelaxed KKT residual, total gap) falls below config.tol.

    Returns:
        The final iterate in original problem coordinates and the solve
        trace; trace.status is "converged", "max_iters", or "stalled"
        (step length collapsed below 1e-10).
    """
    work, scaling = (
        ruiz_equilibrate(problem) if config.equilibrate else (problem, ScalingState.identity(problem))
    )
    trace = SolveTrace(header=_trace_header(problem, config))
    for note in scaling.notes:
        trace.warn(note)
    spectrum = config.trace_level == "spectrum"

    x0, gamma0 = initial_primal(work)
    if work.m == 0:
        z = _solve_equality_only(work, config, trace, x0, gamma0)
        return unscale_solution(z, scaling), trace

    z = ExplicitIterate(x=x0, lam=np.ones(work.m), gamma=gamma0, s=np.ones(work.m))
    kkt: ExplicitKkt | None = None
    prev_slack: np.ndarray | None = None
    status = STATUS_MAX_ITERS
    iteration = 0
    for iteration in range(config.max_iters):
        t0 = time.perf_counter_ns()
        _, r_inf, eta = convergence_measures(work, z.x, z.lam, z.gamma, z.s)
        if max(r_inf, eta) <= config.tol:
            status = STATUS_CONVERGED
            break
        mu = max(config.sigma * eta / work.m, MU_FLOOR)
        kkt = assemble_explicit(work, z, mu, kkt=kkt, precision=config.linear.precision)
        direction, report = explicit_step(work, z, mu, config.linear, kkt=kkt)
        alpha_max = min(
            max_step_to_boundary(z.lam, direction.lam, FRACTION_TO_BOUNDARY),
            max_step_to_boundary(z.s, direction.s, FRACTION_TO_BOUNDARY),
        )

        def merit_at(alpha: float) -> float:
            candidate = ExplicitIterate(
                x=z.x + alpha * direction.x,
                lam=z.lam + alpha * direction.lam,
                gamma=z.gamma + alpha * direction.gamma,
                s=z.s + alpha * direction.s,
            )
            return residuals(work, candidate, mu).inf_norm

        alpha, _, stalled = backtrack_from(alpha_max, kkt.residual.inf_norm, merit_at)
        delta = None if prev_slack is None else float(np.max(np.abs(kkt.slack_diag - prev_slack), initial=0.0))
        prev_slack = kkt.slack_diag.copy()
        record_iteration(
            trace,
            build_record(
                iteration,
                mu,
                eta,
                kkt.residual,
                r_inf,
                alpha,
                report,
                time.perf_counter_ns() - t0,
                kkt.matrix if spectrum else None,
                delta,
                None,
                spectrum,
            ),
        )
        if stalled:
            status = STATUS_STALLED
            iteration += 1
            break
        z = ExplicitIterate(
            x=z.x + alpha * direction.x,
            lam=z.lam + alpha * direction.lam,
            gamma=z.gamma + alpha * direction.gamma,
            s=z.s + alpha * direction.s,
        )
    else:
        iteration = config.max_iters

    _terminal_record(work, z, config, trace, kkt, prev_slack, iteration)
    trace.status = status
    return unscale_solution(z, scaling), trace


def _terminal_record(
    work: QpProblem,
    z: ExplicitIterate,
    config: SolverConfig,
    trace: SolveTrace,
    kkt: ExplicitKkt | None,
    prev_slack: np.ndarray | None,
    index: int,
) -> None:
    t0 = time.perf_counter_ns()
    spectrum = config.trace_level == "spectrum"
    _, r_inf, eta = convergence_measures(work, z.x, z.lam, z.gamma, z.s)
    mu = max(config.sigma * eta / work.m, MU_FLOOR)
    res_mu = residuals(work, z, mu)
    slack = np.asarray(z.s) / np.asarray(z.lam)
    delta = None if prev_slack is None else float(np.max(np.abs(slack - prev_slack), initial=0.0))
    matrix = None
    if spectrum:
        kkt = assemble_explicit(work, z, mu, kkt=kkt, precision=config.linear.precision)
        matrix = kkt.matrix
    record_iteration(
        trace,
        build_record(
            index, mu, eta, res_mu, r_inf, 0.0, None, time.perf_counter_ns() - t0, matrix, delta, None, spectrum
        ),
    )


def _solve_equality_only(
    work: QpProblem,
    config: SolverConfig,
    trace: SolveTrace,
    x0: np.ndarray,
    gamma0: np.ndarray,
) -> ExplicitIterate:
    """Inequality-free problems need exactly one Newton solve."""
    spectrum = config.trace_level == "spectrum"
    t0 = time.perf_counter_ns()
    empty = np.zeros(0)
    res0 = residuals(work, ExplicitIterate(x=x0, lam=empty, gamma=gamma0, s=empty), 0.0)
    x1, gamma1, matrix, report = equality_newton_step(work, x0, gamma0, config.linear)
    record_iteration(
        trace,
        build_record(
            0,
            0.0,
            0.0,
            res0,
            res0.inf_norm,
            1.0,
            report,
            time.perf_counter_ns() - t0,
            matrix if spectrum else None,
            None,
            None,
            spectrum,
        ),
    )
    z = ExplicitIterate(x=x1, lam=empty, gamma=gamma1, s=empty)
    res1 = residuals(work, z, 0.0)
    record_iteration(
        trace,
        build_record(
            1, 0.0, 0.0, res1, res1.inf_norm, 0.0, None, 0, matrix if spectrum else None, None, None, spectrum
        ),
    )
    trace.status = STATUS_CONVERGED if res1.inf_norm <= config.tol else STATUS_MAX_ITERS
    return z
