"""Interior-point solvers for convex quadratic programs.

Solves min ½xᵀQx + qᵀx subject to Ax ≥ b and Cx = d with two
primal-dual formulations: the standard explicit method whose condensed
matrix carries the Λ⁻¹S complementarity block, and an implicit
formulation that folds complementarity into a smooth retraction map so
the Newton matrix stays bounded and keeps a fixed sparsity pattern.
Linear solves run direct (sparse LDLᵀ), with factorization reuse under
an inexact-Newton acceptance test, or factorization-free via
preconditioned MINRES — each in binary64 or binary32 storage.
"""

from ._common import (
    STATUS_CONVERGED,
    STATUS_MAX_ITERS,
    STATUS_STALLED,
    Direction,
    StepReport,
)
from .config import LinearStrategy, SolverConfig
from .diagnostics import (
    CSV_COLUMNS,
    TRACE_SCHEMA,
    IterationRecord,
    SolveTrace,
    SpectrumMetrics,
    TraceHeader,
    read_trace_jsonl,
    record_iteration,
    spectrum_metrics,
    trace_to_csv,
    trace_to_jsonl,
    write_trace,
)
from .explicit import ExplicitKkt, assemble_explicit, explicit_step, solve_explicit
from .implicit import (
    ImplicitKkt,
    assemble_implicit,
    implicit_residuals,
    implicit_step,
    recover_direction,
    solve_implicit,
)
from .inexact import (
    FrozenFactorization,
    inexact_condition,
    solve_implicit_inexact,
    step_with_reuse,
)
from .linalg import (
    BlockJacobiPreconditioner,
    Factorization,
    FactorizationError,
    KrylovReport,
    SparseSymmetric,
    block_jacobi_precond,
    dense_symmetric_eigenvalues,
    ldlt_factor,
    ldlt_solve,
    minres,
    precision_dtype,
)
from .problem import (
    ExplicitIterate,
    ImplicitIterate,
    QpProblem,
    ResidualVector,
    duality_gap,
    residuals,
)
from .qps import (
    BUILTIN_NAMES,
    QpsFile,
    QpsParseError,
    builtin_problem,
    bundled_instances,
    load_bundled,
    load_problem,
    parse_qps,
    read_problem_json,
    read_solution,
    to_qp_problem,
    write_problem_json,
    write_solution,
)
from .retraction import (
    RetractionEval,
    evaluate_retraction,
    exponential_map,
    softplus,
    softplus_derivative,
)
from .scaling import ScalingState, ruiz_equilibrate, unscale_solution

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # problem model
    "QpProblem",
    "ExplicitIterate",
    "ImplicitIterate",
    "ResidualVector",
    "residuals",
    "duality_gap",
    # retraction map
    "RetractionEval",
    "softplus",
    "softplus_derivative",
    "evaluate_retraction",
    "exponential_map",
    # scaling
    "ScalingState",
    "ruiz_equilibrate",
    "unscale_solution",
    # linear algebra
    "precision_dtype",
    "FactorizationError",
    "SparseSymmetric",
    "Factorization",
    "ldlt_factor",
    "ldlt_solve",
    "KrylovReport",
    "minres",
    "BlockJacobiPreconditioner",
    "block_jacobi_precond",
    "dense_symmetric_eigenvalues",
    # configuration
    "LinearStrategy",
    "SolverConfig",
    # solvers
    "Direction",
    "StepReport",
    "STATUS_CONVERGED",
    "STATUS_MAX_ITERS",
    "STATUS_STALLED",
    "ExplicitKkt",
    "assemble_explicit",
    "explicit_step",
    "solve_explicit",
    "ImplicitKkt",
    "implicit_residuals",
    "assemble_implicit",
    "recover_direction",
    "implicit_step",
    "solve_implicit",
    "FrozenFactorization",
    "inexact_condition",
    "step_with_reuse",
    "solve_implicit_inexact",
    # diagnostics
    "TRACE_SCHEMA",
    "CSV_COLUMNS",
    "TraceHeader",
    "IterationRecord",
    "SolveTrace",
    "record_iteration",
    "SpectrumMetrics",
    "spectrum_metrics",
    "trace_to_jsonl",
    "trace_to_csv",
    "write_trace",
    "read_trace_jsonl",
    # problem I/O
    "QpsParseError",
    "QpsFile",
    "parse_qps",
    "to_qp_problem",
    "BUILTIN_NAMES",
    "builtin_problem",
    "load_problem",
    "bundled_instances",
    "load_bundled",
    "write_solution",
    "read_solution",
    "write_problem_json",
    "read_problem_json",
]
