"""Internal helpers shared by the two interior-point formulations."""

from __future__ import annotations

import dataclasses

import numpy as np

from .config import ARMIJO_FACTOR, STALL_ALPHA, LinearStrategy
from .diagnostics import IterationRecord, SolveTrace, spectrum_metrics
from .linalg import (
    Factorization,
    KrylovReport,
    SparseSymmetric,
    block_jacobi_precond,
    ldlt_factor,
    ldlt_solve,
    minres,
)
from .problem import QpProblem, ResidualVector, duality_gap, residuals

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_STALLED = "stalled"


@dataclasses.dataclass(frozen=True)
class Direction:
    """A Newton direction on the full iterate."""

    x: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    s: np.ndarray
    v: np.ndarray | None = None


@dataclasses.dataclass(frozen=True)
class StepReport:
    """What one Newton step cost and how well the system was solved.

    linearized_residual is the infinity-norm residual of the full
    (uncondensed) linearized system after recovery, relative to the
    right-hand side — recorded, never enforced, since reduced-precision
    strategies legitimately exceed direct-solve accuracy.
    """

    factorized: bool
    krylov_iters: int
    linearized_residual: float
    inertia: tuple[int, int, int] | None = None
    regularization: float = 0.0
    krylov: KrylovReport | None = None


def solve_linear(
    matrix: SparseSymmetric,
    rhs: np.ndarray,
    strategy: LinearStrategy,
    blocks: list[tuple[int, int]],
) -> tuple[np.ndarray, KrylovReport | None, Factorization | None]:
    """Solve one symmetric KKT system per the configured strategy.

    Returns the binary64 solution plus whichever of (Krylov report,
    factorization) the strategy produced.
    """
    if strategy.kind == "direct":
        factorization = ldlt_factor(matrix, strategy.static_reg)
        return ldlt_solve(factorization, rhs), None, factorization
    precond = block_jacobi_precond(matrix, blocks)
    solution, report = minres(
        matrix,
        np.asarray(rhs, dtype=matrix.dtype),
        precond,
        rtol=strategy.rtol,
        atol=strategy.atol,
        max_iters=strategy.krylov_max_iters,
    )
    return solution, report, None


def initial_primal(problem: QpProblem) -> tuple[np.ndarray, np.ndarray]:
    """Starting (x, gamma): least-squares equality-feasible x, zero duals."""
    if problem.p:
        x0, *_ = np.linalg.lstsq(problem.C.toarray(), problem.d, rcond=None)
    else:
        x0 = np.zeros(problem.n)
    return x0, np.zeros(problem.p)


def convergence_measures(problem: QpProblem, x, lam, gamma, s) -> tuple[ResidualVector, float, float]:
    """Unrelaxed KKT residual, its infinity norm, and the total gap."""
    from .problem import ExplicitIterate

    unrelaxed = residuals(problem, ExplicitIterate(x=x, lam=lam, gamma=gamma, s=s), 0.0)
    return unrelaxed, unrelaxed.inf_norm, duality_gap(lam, s)


def max_step_to_boundary(values: np.ndarray, deltas: np.ndarray, fraction: float) -> float:
    """Largest alpha in (0, 1] keeping values + alpha*deltas >= (1-fraction)*values."""
    negative = deltas < 0.0
    if not np.any(negative):
        return 1.0
    limit = fraction * float(np.min(-values[negative] / deltas[negative]))
    return min(1.0, limit)


def backtrack(merit0: float, merit_at) -> tuple[float, float, bool]:
    """Halve alpha from 1 until the merit decreases sufficiently.

    Accepts the first alpha with merit(alpha) <= (1 - c*alpha) * merit0
    (c = 1e-4).  Returns (alpha, merit, stalled); stalled means no alpha
    above the stall threshold was acceptable.
    """
    return backtrack_from(1.0, merit0, merit_at)


def backtrack_from(alpha_start: float, merit0: float, merit_at) -> tuple[float, float, bool]:
    alpha = alpha_start
    while alpha >= STALL_ALPHA:
        candidate = merit_at(alpha)
        if np.isfinite(candidate) and candidate <= (1.0 - ARMIJO_FACTOR * alpha) * merit0:
            return alpha, float(candidate), False
        alpha *= 0.5
    return 0.0, merit0, True


def build_record(
    iteration: int,
    mu: float,
    eta: float,
    method_residual: ResidualVector,
    unrelaxed_inf: float,
    alpha: float,
    report: StepReport | None,
    wall_time_ns: int,
    matrix: SparseSymmetric | None,
    matrix_delta: float | None,
    db_minus: np.ndarray | None,
    spectrum: bool,
) -> IterationRecord:
    """Assemble one trace record from loop state."""
    r_x_inf, r_i_inf, r_e_inf, r_comp_inf = method_residual.block_inf_norms()
    eig_min = eig_max = cond = None
    if spectrum and matrix is not None:
        metrics = spectrum_metrics(matrix)
        eig_min, eig_max, cond = metrics.eig_min_abs, metrics.eig_max_abs, metrics.cond
    return IterationRecord(
        iteration=iteration,
        mu=mu,
        eta=eta,
        r_x_inf=r_x_inf,
        r_i_inf=r_i_inf,
        r_e_inf=r_e_inf,
        r_comp_inf=r_comp_inf,
        r_inf=unrelaxed_inf,
        alpha=alpha,
        factorized=bool(report.factorized) if report else False,
        krylov_iters=report.krylov_iters if report else 0,
        wall_time_ns=wall_time_ns,
        eig_min=eig_min,
        eig_max=eig_max,
        cond=cond,
        matrix_delta=matrix_delta,
        db_minus=tuple(float(t) for t in db_minus) if (spectrum and db_minus is not None) else None,
    )


def equality_kkt(problem: QpProblem, strategy: LinearStrategy) -> SparseSymmetric:
    """KKT matrix [[Q, -C'], [-C, 0]] of an inequality-free problem."""
    import scipy.sparse as sp

    n, p = problem.n, problem.p
    if p:
        full = sp.bmat([[problem.Q, -problem.C.T], [-problem.C, None]], format="csc")
    else:
        full = problem.Q.tocsc()
    reg_signs = np.concatenate([np.ones(n), -np.ones(p)])
    return SparseSymmetric.from_full(full, precision=strategy.precision, reg_signs=reg_signs)


def equality_newton_step(
    problem: QpProblem,
    x: np.ndarray,
    gamma: np.ndarray,
    strategy: LinearStrategy,
) -> tuple[np.ndarray, np.ndarray, SparseSymmetric, StepReport]:
    """One Newton solve for a problem with no inequalities.

    Solves [[Q, -C'], [-C, 0]] (dx, dgamma) = (-r_x, r_e); the result is
    exact for the quadratic objective, so one step reaches optimality.
    """
    n, p = problem.n, problem.p
    res = residuals(problem, _iterate_view(problem, x, gamma), 0.0)
    rhs = np.concatenate([-res.r_x, res.r_e])
    matrix = equality_kkt(problem, strategy)
    blocks = [(0, n), (n, n + p)] if p else [(0, n)]
    solution, krylov_report, factorization = solve_linear(matrix, rhs, strategy, blocks)
    dx, dgamma = solution[:n], solution[n:]
    row1 = problem.Q @ dx - problem.C.T @ dgamma + res.r_x
    row2 = problem.C @ dx + res.r_e
    scale = max(float(np.max(np.abs(rhs), initial=0.0)), np.finfo(np.float64).tiny)
    rel = max(float(np.max(np.abs(row1), initial=0.0)), float(np.max(np.abs(row2), initial=0.0))) / scale
    report = StepReport(
        factorized=strategy.kind == "direct",
        krylov_iters=krylov_report.iterations if krylov_report else 0,
        linearized_residual=rel,
        inertia=factorization.inertia if factorization else None,
        regularization=factorization.regularization if factorization else 0.0,
        krylov=krylov_report,
    )
    return x + dx, gamma + dgamma, matrix, report


def _iterate_view(problem: QpProblem, x: np.ndarray, gamma: np.ndarray):
    from .problem import ExplicitIterate

    return ExplicitIterate(x=x, lam=np.zeros(problem.m), gamma=gamma, s=np.zeros(problem.m))


def finalize_trace(trace: SolveTrace, status: str) -> SolveTrace:
    trace.status = status
    return trace
