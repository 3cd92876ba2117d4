"""Solver configuration shared by both interior-point formulations."""

from __future__ import annotations

import dataclasses
from typing import Literal

__all__ = ["LinearStrategy", "SolverConfig", "Method", "LinsolveKind", "Precision", "TraceLevel"]

Method = Literal["explicit", "implicit"]
LinsolveKind = Literal["direct", "minres"]
Precision = Literal["f64", "f32"]
TraceLevel = Literal["basic", "spectrum"]

STALL_ALPHA = 1e-10
ARMIJO_FACTOR = 1e-4
MU_FLOOR = 1e-300
POSITIVITY_FLOOR = 1e-300
FRACTION_TO_BOUNDARY = 0.99


@dataclasses.dataclass(frozen=True)
class LinearStrategy:
    """How each Newton system is solved.

    Attributes:
        kind: "direct" for an LDL' factorization per step, "minres" for a
            factorization-free Krylov solve with block-Jacobi
            preconditioning.
        precision: scalar precision of matrix assembly and the linear
            solve ("f32" quantizes the matrix and runs the factorization
            or Krylov recurrence in binary32; residuals and line search
            always evaluate in binary64).
        rtol: MINRES relative tolerance on the preconditioned residual.
        atol: MINRES absolute tolerance.
        krylov_max_iters: MINRES iteration cap (None = 5 * dimension).
        static_reg: signed static regularization magnitude for the direct
            factorization (None = 1e-9 * matrix infinity norm).
    """

    kind: LinsolveKind = "direct"
    precision: Precision = "f64"
    rtol: float = 1e-10
    atol: float = 1e-10
    krylov_max_iters: int | None = None
    static_reg: float | None = None

    def __post_init__(self):
        if self.kind not in ("direct", "minres"):
            raise ValueError(f"unknown linear-strategy kind {self.kind!r}")
        if self.precision not in ("f64", "f32"):
            raise ValueError(f"unknown precision {self.precision!r}")
        if self.rtol < 0.0 or self.atol < 0.0:
            raise ValueError("Krylov tolerances must be nonnegative")
        if self.static_reg is not None and self.static_reg < 0.0:
            raise ValueError("static regularization must be nonnegative")


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """Options for one solve.

    Attributes:
        sigma: centering factor in (0, 1]; each iteration relaxes
            complementarity to mu = sigma * gap / m.
        tol: termination tolerance on max(unrelaxed KKT residual
            infinity norm, total gap).
        max_iters: outer-iteration budget.
        theta: forcing term in [0, 1) for factorization reuse (used by
            the reuse-enabled solve only; 0 forces a refactorization at
            every step).
        linear: linear-solve strategy.
        trace_level: "basic" records residual/step scalars; "spectrum"
            additionally records eigenvalue extrema, condition numbers,
            and the retraction-derivative snapshot (small problems only).
        equilibrate: scale the problem before solving and map the
            solution back afterwards.
        debug_checks: re-verify every accepted frozen-factorization step
            against a fresh matrix (testing aid; slow).
        mu0: initial barrier parameter for the implicit solver's state
            initialization.
    """

    sigma: float = 0.1
    tol: float = 1e-9
    max_iters: int = 200
    theta: float = 0.5
    linear: LinearStrategy = dataclasses.field(default_factory=LinearStrategy)
    trace_level: TraceLevel = "basic"
    equilibrate: bool = True
    debug_checks: bool = False
    mu0: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.sigma <= 1.0):
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (0.0 <= self.theta < 1.0):
            raise ValueError(f"theta must lie in [0, 1), got {self.theta}")
        if self.trace_level not in ("basic", "spectrum"):
            raise ValueError(f"unknown trace level {self.trace_level!r}")
        if self.mu0 <= 0.0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
