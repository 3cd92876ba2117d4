"""Implicit-complementarity interior-point solver.

Instead of keeping the complementarity pair (lambda, s) positive by
step-length damping, each pair is pulled onto the retraction curve
lambda = b_mu(v), s = b_mu(-v) through an auxiliary unconstrained
variable v and two extra residuals.  Eliminating (dlambda, ds) leaves
the symmetric system

    J(v) = [ Q - A'A   -A'            -C' ]
           [ -A        -dB_mu(-v)      0  ]
           [ -C         0              0  ]

whose only iteration-dependent part is the (2,2) diagonal of retraction
derivatives — each entry strictly inside (-1, 0) for every v and mu, so
J stays bounded and well-conditioned all the way to convergence.  Steps
are joint in (x, v, gamma, lambda, s) with a plain backtracking line
search; no fraction-to-boundary rule is needed.
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
    backtrack,
    build_record,
    convergence_measures,
    equality_newton_step,
    initial_primal,
    solve_linear,
)
from .config import MU_FLOOR, POSITIVITY_FLOOR, LinearStrategy, SolverConfig
from .diagnostics import SolveTrace, TraceHeader, record_iteration
from .linalg import SparseSymmetric
from .problem import ExplicitIterate, ImplicitIterate, QpProblem, ResidualVector, residuals
from .retraction import RetractionEval, evaluate_retraction
from .scaling import ScalingState, ruiz_equilibrate, unscale_solution

__all__ = ["ImplicitKkt", "implicit_residuals", "assemble_implicit", "implicit_step", "solve_implicit"]


@dataclasses.dataclass
class ImplicitKkt:
    """Condensed KKT system J(v) dz = rhs for one iteration.

    Attributes:
        matrix: J(v), symmetric indefinite with a fixed sparsity pattern.
        rhs: stacked right-hand side, binary64.
        db_minus: the retraction derivatives db_mu(-v) whose negation is
            the mutable (2,2) diagonal, kept in binary64 for diagnostics.
        retraction: full retraction evaluation at (v, mu), reused by the
            step recovery.
        residual: the implicit residual the system was built from
            (r_comp holds r_lambda and r_s stacked).
        dims: (n, m, p).
    """

    matrix: SparseSymmetric
    rhs: np.ndarray
    db_minus: np.ndarray
    retraction: RetractionEval
    residual: ResidualVector
    dims: tuple[int, int, int]


def implicit_residuals(problem: QpProblem, z: ImplicitIterate, mu: float) -> ResidualVector:
    """Residuals of the implicit formulation at an iterate.

    The feasibility and stationarity blocks are those of the standard
    KKT system; complementarity is replaced by the retraction residuals
    r_lambda = lambda - b_mu(v) and r_s = s - b_mu(-v), returned stacked
    in ``r_comp``.  When both vanish, lambda * s = mu holds identically.

    Raises:
        ValueError: mu <= 0, or non-finite iterate entries.
    """
    base = residuals(problem, ExplicitIterate(x=z.x, lam=z.lam, gamma=z.gamma, s=z.s), 0.0)
    ev = evaluate_retraction(np.asarray(z.v, dtype=np.float64), mu)
    r_lam = np.asarray(z.lam, dtype=np.float64) - ev.b_plus
    r_s = np.asarray(z.s, dtype=np.float64) - ev.b_minus
    return ResidualVector(r_x=base.r_x, r_i=base.r_i, r_e=base.r_e, r_comp=np.concatenate([r_lam, r_s]))


def assemble_implicit(
    problem: QpProblem,
    z: ImplicitIterate,
    mu: float,
    kkt: ImplicitKkt | None = None,
    precision: str = "f64",
) -> ImplicitKkt:
    """Assemble (or refresh in place) the implicit KKT system.

    Passing the previous iteration's ``kkt`` overwrites only the m
    retraction-derivative entries of the (2,2) diagonal and the
    right-hand side; everything else in J is iteration-independent.
    """
    n, m, p = problem.n, problem.m, problem.p
    res = implicit_residuals(problem, z, mu)
    ev = evaluate_retraction(np.asarray(z.v, dtype=np.float64), mu)
    r_lam, r_s = res.r_comp[:m], res.r_comp[m:]
    rhs = np.concatenate(
        [
            -res.r_x + problem.A.T @ (res.r_i - r_lam + r_s),
            res.r_i + r_s,
            res.r_e,
        ]
    )
    db_minus = np.asarray(ev.db_minus, dtype=np.float64)
    if kkt is not None:
        kkt.matrix.update_diagonal(-db_minus, start=n)
        kkt.db_minus = db_minus
        kkt.retraction = ev
        kkt.rhs = rhs
        kkt.residual = res
        return kkt
    head = (problem.Q - (problem.A.T @ problem.A)).tocsc()
    blocks: list[list] = [[head]]
    if m:
        blocks[0].append(-problem.A.T)
    if p:
        blocks[0].append(-problem.C.T)
    if m:
        row: list = [-problem.A, sp.diags(-db_minus, format="csc")]
        if p:
            row.append(None)
        blocks.append(row)
    if p:
        row = [-problem.C]
        if m:
            row.append(None)
        row.append(sp.csc_matrix((p, p)))
        blocks.append(row)
    full = sp.bmat(blocks, format="csc") if len(blocks) > 1 or len(blocks[0]) > 1 else head
    reg_signs = np.concatenate([np.ones(n), -np.ones(m + p)])
    matrix = SparseSymmetric.from_full(full, precision=precision, reg_signs=reg_signs)
    return ImplicitKkt(matrix=matrix, rhs=rhs, db_minus=db_minus, retraction=ev, residual=res, dims=(n, m, p))


def recover_direction(problem: QpProblem, kkt: ImplicitKkt, solution: np.ndarray) -> tuple[Direction, float]:
    """Recover the full direction from a condensed solve.

    dlambda and ds come from the linearized retraction rows, which hold
    exactly by construction:

        dlambda =  db_mu(v)  * dv - r_lambda
        ds      = -db_mu(-v) * dv - r_s

    Returns the direction and the infinity-norm relative residual of the
    full five-block linearized system, evaluated in binary64.
    """
    n, m, _ = kkt.dims
    dx = solution[:n]
    dv = solution[n : n + m]
    dgamma = solution[n + m :]
    res = kkt.residual
    r_lam, r_s = res.r_comp[:m], res.r_comp[m:]
    ev = kkt.retraction
    dlam = ev.db_plus * dv - r_lam
    ds = -ev.db_minus * dv - r_s
    rows = (
        problem.Q @ dx - problem.A.T @ dlam - problem.C.T @ dgamma + res.r_x,
        problem.A @ dx - ds + res.r_i,
        problem.C @ dx + res.r_e,
        dlam - ev.db_plus * dv + r_lam,
        ds + ev.db_minus * dv + r_s,
    )
    scale = max(res.inf_norm, np.finfo(np.float64).tiny)
    rel = max(float(np.max(np.abs(row), initial=0.0)) for row in rows) / scale
    return Direction(x=dx, lam=dlam, gamma=dgamma, s=ds, v=dv), rel


def implicit_step(
    problem: QpProblem,
    z: ImplicitIterate,
    mu: float,
    strategy: LinearStrategy = LinearStrategy(),
    kkt: ImplicitKkt | None = None,
) -> tuple[Direction, StepReport]:
    """Compute one Newton direction for the implicit formulation."""
    if kkt is None:
        kkt = assemble_implicit(problem, z, mu, precision=strategy.precision)
    n, m, p = kkt.dims
    blocks = [(0, n), (n, n + m), (n + m, n + m + p)]
    solution, krylov_report, factorization = solve_linear(kkt.matrix, kkt.rhs, strategy, blocks)
    direction, rel = recover_direction(problem, kkt, solution)
    report = StepReport(
        factorized=strategy.kind == "direct",
        krylov_iters=krylov_report.iterations if krylov_report else 0,
        linearized_residual=rel,
        inertia=factorization.inertia if factorization else None,
        regularization=factorization.regularization if factorization else 0.0,
        krylov=krylov_report,
    )
    return direction, report


class _ExactStepper:
    """Fresh linear solve (direct or Krylov) every iteration."""

    def __init__(self, problem: QpProblem, strategy: LinearStrategy):
        self.problem = problem
        self.strategy = strategy
        self.kkt: ImplicitKkt | None = None

    def step(self, z: ImplicitIterate, mu: float, iteration: int) -> tuple[Direction, StepReport, ImplicitKkt]:
        self.kkt = assemble_implicit(self.problem, z, mu, kkt=self.kkt, precision=self.strategy.precision)
        direction, report = implicit_step(self.problem, z, mu, self.strategy, kkt=self.kkt)
        return direction, report, self.kkt


def _trace_header(problem: QpProblem, config: SolverConfig, linsolve: str, theta: float | None) -> TraceHeader:
    return TraceHeader(
        method="implicit",
        linear_strategy=linsolve,
        precision=config.linear.precision,
        sigma=config.sigma,
        theta=theta,
        tol=config.tol,
        problem=problem.name or "unnamed",
        equilibrate=config.equilibrate,
        trace_level=config.trace_level,
    )


def solve_implicit(problem: QpProblem, config: SolverConfig = SolverConfig()) -> tuple[ImplicitIterate, SolveTrace]:
    """Solve a QP with the implicit-complementarity method.

    Same outer loop and termination rule as the explicit solver, but
    steps are joint in (x, v, gamma, lambda, s) with a plain backtracking
    line search (always evaluated in binary64), and positivity is
    maintained by the retraction pull rather than step damping.

    Returns:
        The final iterate in original coordinates and the trace;
        trace.status is "converged", "max_iters", or "stalled".
    """
    return run_implicit_loop(
        problem,
        config,
        stepper_factory=lambda work: _ExactStepper(work, config.linear),
        linsolve=config.linear.kind,
        theta=None,
    )


def run_implicit_loop(
    problem: QpProblem,
    config: SolverConfig,
    stepper_factory,
    linsolve: str,
    theta: float | None,
) -> tuple[ImplicitIterate, SolveTrace]:
    """Outer interior-point loop shared by the exact and reuse solvers."""
    work, scaling = (
        ruiz_equilibrate(problem) if config.equilibrate else (problem, ScalingState.identity(problem))
    )
    trace = SolveTrace(header=_trace_header(problem, config, linsolve, theta))
    for note in scaling.notes:
        trace.warn(note)
    spectrum = config.trace_level == "spectrum"

    x0, gamma0 = initial_primal(work)
    if work.m == 0:
        z = _solve_equality_only(work, config, trace, x0, gamma0)
        return unscale_solution(z, scaling), trace

    m = work.m
    sqrt_mu0 = float(np.sqrt(config.mu0))
    z = ImplicitIterate(x=x0, lam=sqrt_mu0 * np.ones(m), gamma=gamma0, s=sqrt_mu0 * np.ones(m), v=np.zeros(m))
    stepper = stepper_factory(work)
    prev_db: np.ndarray | None = None
    last_kkt: ImplicitKkt | None = None
    status = STATUS_MAX_ITERS
    iteration = 0
    for iteration in range(config.max_iters):
        t0 = time.perf_counter_ns()
        _, r_inf, eta = convergence_measures(work, z.x, z.lam, z.gamma, z.s)
        if max(r_inf, eta) <= config.tol:
            status = STATUS_CONVERGED
            break
        mu = max(config.sigma * eta / m, MU_FLOOR)
        direction, report, kkt = stepper.step(z, mu, iteration)
        last_kkt = kkt

        def merit_at(alpha: float) -> float:
            candidate = ImplicitIterate(
                x=z.x + alpha * direction.x,
                lam=z.lam + alpha * direction.lam,
                gamma=z.gamma + alpha * direction.gamma,
                s=z.s + alpha * direction.s,
                v=z.v + alpha * direction.v,
            )
            return implicit_residuals(work, candidate, mu).inf_norm

        alpha, _, stalled = backtrack(kkt.residual.inf_norm, merit_at)
        delta = None if prev_db is None else float(np.max(np.abs(kkt.db_minus - prev_db), initial=0.0))
        prev_db = kkt.db_minus.copy()
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
                kkt.db_minus,
                spectrum,
            ),
        )
        if stalled:
            status = STATUS_STALLED
            iteration += 1
            break
        lam_new = z.lam + alpha * direction.lam
        s_new = z.s + alpha * direction.s
        clipped = int(np.sum(lam_new < POSITIVITY_FLOOR) + np.sum(s_new < POSITIVITY_FLOOR))
        if clipped:
            trace.warn(f"iteration {iteration}: clipped {clipped} lambda/s entries to the positivity floor")
            lam_new = np.maximum(lam_new, POSITIVITY_FLOOR)
            s_new = np.maximum(s_new, POSITIVITY_FLOOR)
        z = ImplicitIterate(
            x=z.x + alpha * direction.x,
            lam=lam_new,
            gamma=z.gamma + alpha * direction.gamma,
            s=s_new,
            v=z.v + alpha * direction.v,
        )
    else:
        iteration = config.max_iters

    _terminal_record(work, z, config, trace, stepper, last_kkt, prev_db, iteration)
    trace.status = status
    return unscale_solution(z, scaling), trace


def _terminal_record(
    work: QpProblem,
    z: ImplicitIterate,
    config: SolverConfig,
    trace: SolveTrace,
    stepper,
    last_kkt: ImplicitKkt | None,
    prev_db: np.ndarray | None,
    index: int,
) -> None:
    t0 = time.perf_counter_ns()
    spectrum = config.trace_level == "spectrum"
    _, r_inf, eta = convergence_measures(work, z.x, z.lam, z.gamma, z.s)
    mu = max(config.sigma * eta / work.m, MU_FLOOR)
    res_mu = implicit_residuals(work, z, mu)
    db_final = np.asarray(evaluate_retraction(z.v, mu).db_minus, dtype=np.float64)
    delta = None if prev_db is None else float(np.max(np.abs(db_final - prev_db), initial=0.0))
    matrix = None
    if spectrum:
        kkt = assemble_implicit(work, z, mu, kkt=last_kkt, precision=config.linear.precision)
        matrix = kkt.matrix
    record_iteration(
        trace,
        build_record(
            index,
            mu,
            eta,
            res_mu,
            r_inf,
            0.0,
            None,
            time.perf_counter_ns() - t0,
            matrix,
            delta,
            db_final,
            spectrum,
        ),
    )


def _solve_equality_only(
    work: QpProblem,
    config: SolverConfig,
    trace: SolveTrace,
    x0: np.ndarray,
    gamma0: np.ndarray,
) -> ImplicitIterate:
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
            empty,
            spectrum,
        ),
    )
    z = ImplicitIterate(x=x1, lam=empty, gamma=gamma1, s=empty, v=empty)
    res1 = residuals(work, ExplicitIterate(x=x1, lam=empty, gamma=gamma1, s=empty), 0.0)
    record_iteration(
        trace,
        build_record(
            1, 0.0, 0.0, res1, res1.inf_norm, 0.0, None, 0, matrix if spectrum else None, None, empty, spectrum
        ),
    )
    trace.status = STATUS_CONVERGED if res1.inf_norm <= config.tol else STATUS_MAX_ITERS
    return z
