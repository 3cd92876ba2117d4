"""Factorization reuse for the implicit solver via an inexact-Newton test.

Because only the retraction-derivative diagonal of J(v) moves between
iterations, a factorization of a frozen J* = J(v*) keeps producing
acceptable Newton steps for as long as

    || (dB_mu(-v*) - dB_mu(-v_k)) dv_k ||_2  <=  theta_k || r2_k ||_2,

where r2_k is the second right-hand-side block.  The left side is, by
substitution, exactly the residual the frozen step leaves in the true
linearized system, so the test is the standard inexact-Newton condition
with forcing term theta_k evaluated after the (cheap) frozen solve.  On
failure the matrix is refactored at v_k and the fresh — hence exact —
step is used directly.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ._common import Direction, StepReport
from .config import LinearStrategy, SolverConfig
from .diagnostics import SolveTrace
from .implicit import ImplicitKkt, assemble_implicit, recover_direction, run_implicit_loop
from .linalg import Factorization, ldlt_factor, ldlt_solve
from .problem import ImplicitIterate, QpProblem
from .retraction import softplus_derivative

__all__ = ["FrozenFactorization", "inexact_condition", "step_with_reuse", "solve_implicit_inexact"]


@dataclasses.dataclass
class FrozenFactorization:
    """A factorization of J(v*) kept alive across iterations.

    Attributes:
        factorization: factors of the frozen matrix (its own storage,
            never mutated by later assemblies).
        v_star: the auxiliary variable the matrix was assembled at.
        mu_star: the barrier parameter at freeze time.
        db_minus_star: the derivative diagonal actually factored,
            dB_{mu_star}(-v*).
        created_at: outer-iteration index of creation.
        reuse_count: accepted frozen steps since creation.
    """

    factorization: Factorization
    v_star: np.ndarray
    mu_star: float
    db_minus_star: np.ndarray
    created_at: int
    reuse_count: int = 0


def inexact_condition(
    v_star: np.ndarray,
    v_k: np.ndarray,
    dv_k: np.ndarray,
    mu: float,
    theta_k: float,
    r2_k: np.ndarray,
    db_minus_star: np.ndarray | None = None,
) -> bool:
    """Decide whether a frozen-matrix step satisfies the forcing condition.

    Evaluates ||(dB_mu(-v*) - dB_mu(-v_k)) dv_k||_2 <= theta_k ||r2_k||_2.
    Since the frozen and fresh matrices differ only in the derivative
    diagonal, the left side equals the norm the frozen step leaves in
    the true linearized system's second block.

    Args:
        v_star: frozen-point auxiliary variable.
        v_k: current auxiliary variable.
        dv_k: the dv block produced by the frozen solve.
        mu: current barrier parameter.
        theta_k: forcing term in [0, 1); 0 accepts only an exactly zero
            left side (forcing a refactorization in practice).
        r2_k: current second right-hand-side block.
        db_minus_star: the diagonal that was actually factored; when
            given it replaces the dB_mu(-v*) recomputation, making the
            test exact even though mu has moved since freeze time.

    Raises:
        ValueError: theta_k outside [0, 1) or mismatched lengths.
    """
    if not (0.0 <= theta_k < 1.0):
        raise ValueError(f"theta must lie in [0, 1), got {theta_k}")
    v_star = np.asarray(v_star, dtype=np.float64)
    v_k = np.asarray(v_k, dtype=np.float64)
    dv_k = np.asarray(dv_k, dtype=np.float64)
    if v_star.shape != v_k.shape or v_k.shape != dv_k.shape:
        raise ValueError("v_star, v_k, dv_k must have identical shapes")
    frozen_diag = (
        np.asarray(softplus_derivative(-v_star, mu)) if db_minus_star is None else np.asarray(db_minus_star)
    )
    fresh_diag = np.asarray(softplus_derivative(-v_k, mu))
    left = float(np.linalg.norm((frozen_diag - fresh_diag) * dv_k))
    right = theta_k * float(np.linalg.norm(np.asarray(r2_k, dtype=np.float64)))
    return left <= right


def _freeze(kkt: ImplicitKkt, z: ImplicitIterate, mu: float, strategy: LinearStrategy, iteration: int) -> FrozenFactorization:
    frozen_matrix = kkt.matrix.copy()
    factorization = ldlt_factor(frozen_matrix, strategy.static_reg)
    return FrozenFactorization(
        factorization=factorization,
        v_star=np.asarray(z.v, dtype=np.float64).copy(),
        mu_star=mu,
        db_minus_star=kkt.db_minus.copy(),
        created_at=iteration,
    )


def step_with_reuse(
    problem: QpProblem,
    z: ImplicitIterate,
    mu: float,
    cache: FrozenFactorization | None,
    theta_k: float,
    strategy: LinearStrategy = LinearStrategy(),
    kkt: ImplicitKkt | None = None,
    iteration: int = 0,
    debug_checks: bool = False,
) -> tuple[Direction, FrozenFactorization, bool, StepReport]:
    """One implicit Newton step, reusing a frozen factorization when it passes.

    With a cache present, the frozen system is solved against the current
    right-hand side and the forcing condition is tested on the produced
    dv; acceptance returns that step without any factorization work.
    Rejection (or an empty cache) factors the current matrix, which
    becomes the new frozen point, and uses its exact step unconditionally.

    Returns:
        (direction, cache', used_frozen, report).
    """
    if kkt is None:
        kkt = assemble_implicit(problem, z, mu, precision=strategy.precision)
    n, m, _ = kkt.dims
    r2 = kkt.rhs[n : n + m]
    if cache is not None:
        solution = ldlt_solve(cache.factorization, kkt.rhs)
        dv = solution[n : n + m]
        if inexact_condition(cache.v_star, z.v, dv, mu, theta_k, r2, db_minus_star=cache.db_minus_star):
            if debug_checks:
                _verify_frozen_step(kkt, solution, theta_k)
            cache.reuse_count += 1
            direction, rel = recover_direction(problem, kkt, solution)
            report = StepReport(
                factorized=False,
                krylov_iters=0,
                linearized_residual=rel,
                inertia=cache.factorization.inertia,
                regularization=cache.factorization.regularization,
            )
            return direction, cache, True, report
    cache = _freeze(kkt, z, mu, strategy, iteration)
    solution = ldlt_solve(cache.factorization, kkt.rhs)
    direction, rel = recover_direction(problem, kkt, solution)
    report = StepReport(
        factorized=True,
        krylov_iters=0,
        linearized_residual=rel,
        inertia=cache.factorization.inertia,
        regularization=cache.factorization.regularization,
    )
    return direction, cache, False, report


def _verify_frozen_step(kkt: ImplicitKkt, solution: np.ndarray, theta_k: float) -> None:
    """Check the unsimplified inexact-Newton inequality with the fresh matrix."""
    fresh = kkt.matrix.full().astype(np.float64)
    residual = float(np.linalg.norm(fresh @ solution - kkt.rhs))
    bound = theta_k * float(np.linalg.norm(kkt.rhs))
    slack = 1.0 + 1e-8
    if residual > bound * slack + 1e-300:
        raise AssertionError(
            f"accepted frozen step violates the forcing bound on recheck: {residual:.6e} > {bound:.6e}"
        )


class _ReuseStepper:
    """Stepper plugging factorization reuse into the implicit loop."""

    def __init__(self, problem: QpProblem, strategy: LinearStrategy, theta: float, debug_checks: bool):
        self.problem = problem
        self.strategy = strategy
        self.theta = theta
        self.debug_checks = debug_checks
        self.kkt: ImplicitKkt | None = None
        self.cache: FrozenFactorization | None = None

    def step(self, z: ImplicitIterate, mu: float, iteration: int) -> tuple[Direction, StepReport, ImplicitKkt]:
        self.kkt = assemble_implicit(self.problem, z, mu, kkt=self.kkt, precision=self.strategy.precision)
        direction, self.cache, _, report = step_with_reuse(
            self.problem,
            z,
            mu,
            self.cache,
            self.theta,
            strategy=self.strategy,
            kkt=self.kkt,
            iteration=iteration,
            debug_checks=self.debug_checks,
        )
        return direction, report, self.kkt


def solve_implicit_inexact(problem: QpProblem, config: SolverConfig = SolverConfig()) -> tuple[ImplicitIterate, SolveTrace]:
    """Implicit solve with factorization reuse governed by config.theta.

    Identical outer loop, line search, and termination rule to the exact
    implicit solver; the trace's ``factorized`` flag records which
    iterations actually paid for a factorization.
    """
    if config.linear.kind != "direct":
        raise ValueError("factorization reuse requires the direct linear strategy")
    return run_implicit_loop(
        problem,
        config,
        stepper_factory=lambda work: _ReuseStepper(work, config.linear, config.theta, config.debug_checks),
        linsolve="inexact",
        theta=config.theta,
    )
