"""Ruiz equilibration of QP data and solution unscaling.

Iteratively rescales the stacked first-order structure

    [ Q  A'  C' ]
    [ A  0   0  ]
    [ C  0   0  ]

by inverse square roots of row infinity norms until every row norm is
within tolerance of 1.  The matrix is symmetric, so one diagonal per
block (variables, inequality rows, equality rows) covers rows and
columns alike.  A separate scalar c_obj caps the scaled linear cost at
unit magnitude.  Solutions computed on the scaled problem map back
through :func:`unscale_solution`.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse as sp

from .problem import QpProblem

__all__ = ["ScalingState", "ruiz_equilibrate", "unscale_solution"]

DEFAULT_MAX_PASSES = 10
DEFAULT_TOL = 1e-3


@dataclasses.dataclass(frozen=True)
class ScalingState:
    """Diagonal scalings mapping between original and scaled problems.

    Attributes:
        d_x: variable (column) scaling, n-vector, > 0.
        d_i: inequality row scaling, m-vector, > 0.
        d_e: equality row scaling, p-vector, > 0.
        c_obj: objective scaling scalar, > 0.
        passes: equilibration passes actually performed.
        notes: human-readable warnings (for example, structurally zero rows).
    """

    d_x: np.ndarray
    d_i: np.ndarray
    d_e: np.ndarray
    c_obj: float
    passes: int
    notes: tuple[str, ...] = ()

    @staticmethod
    def identity(problem: QpProblem) -> "ScalingState":
        return ScalingState(
            d_x=np.ones(problem.n),
            d_i=np.ones(problem.m),
            d_e=np.ones(problem.p),
            c_obj=1.0,
            passes=0,
        )


def _stacked_row_norms(problem: QpProblem, d: np.ndarray) -> np.ndarray:
    n, m, p = problem.n, problem.m, problem.p
    top = [problem.Q]
    if m:
        top.append(problem.A.T)
    if p:
        top.append(problem.C.T)
    blocks = [top]
    if m:
        blocks.append([problem.A, None] + ([None] if p else []))
    if p:
        blocks.append([problem.C] + ([None] if m else []) + [None])
    stacked = sp.bmat(blocks, format="csr")
    scaled = sp.diags(d) @ stacked @ sp.diags(d)
    scaled = sp.csr_matrix(abs(scaled))
    norms = np.zeros(n + m + p)
    if scaled.nnz:
        norms = np.asarray(scaled.max(axis=1).todense()).reshape(-1)
    return norms


def ruiz_equilibrate(
    problem: QpProblem,
    max_passes: int = DEFAULT_MAX_PASSES,
    tol: float = DEFAULT_TOL,
) -> tuple[QpProblem, ScalingState]:
    """Equilibrate a problem; returns (scaled problem, scalings).

    Passes stop as soon as every stacked row norm lies within ``tol`` of 1
    or after ``max_passes``.  Structurally zero rows keep a unit scaling
    and are reported in the returned state's notes.

    Args:
        problem: problem to scale.
        max_passes: pass budget (>= 0; 0 returns identity scaling).
        tol: convergence tolerance on |row norm - 1|.

    Returns:
        The scaled problem and the :class:`ScalingState` that maps
        solutions of it back to the original coordinates.
    """
    n, m, p = problem.n, problem.m, problem.p
    d = np.ones(n + m + p)
    notes: list[str] = []
    zero_rows_seen: set[int] = set()
    passes = 0
    for _ in range(max_passes):
        norms = _stacked_row_norms(problem, d)
        zero = norms == 0.0
        for idx in np.flatnonzero(zero):
            if idx not in zero_rows_seen:
                zero_rows_seen.add(int(idx))
                block = "variable" if idx < n else ("inequality row" if idx < n + m else "equality row")
                local = idx if idx < n else (idx - n if idx < n + m else idx - n - m)
                notes.append(f"equilibration: structurally zero {block} {local}; scaling left at 1")
        norms[zero] = 1.0
        if np.max(np.abs(norms - 1.0), initial=0.0) <= tol:
            break
        d = d / np.sqrt(norms)
        passes += 1

    d_x, d_i, d_e = d[:n], d[n : n + m], d[n + m :]
    q_scaled = d_x * problem.q
    c_obj = 1.0 / max(1.0, float(np.max(np.abs(q_scaled), initial=0.0)))
    Dx = sp.diags(d_x)
    scaled = QpProblem.build(
        Q=c_obj * (Dx @ problem.Q @ Dx),
        q=c_obj * q_scaled,
        A=sp.diags(d_i) @ problem.A @ Dx if m else None,
        b=d_i * problem.b if m else None,
        C=sp.diags(d_e) @ problem.C @ Dx if p else None,
        d=d_e * problem.d if p else None,
        name=problem.name,
        objective_constant=c_obj * problem.objective_constant,
    )
    state = ScalingState(d_x=d_x, d_i=d_i, d_e=d_e, c_obj=c_obj, passes=passes, notes=tuple(notes))
    return scaled, state


def unscale_solution(z, scaling: ScalingState):
    """Map an iterate from scaled-problem coordinates back to the original.

    Accepts either iterate type (anything with x, lam, gamma, s and an
    optional v) and returns the same type.  x picks up the column
    scalings, duals divide by c_obj with their row scalings, the slack
    inverts the inequality row scaling, and v (an unconstrained auxiliary
    tied to the scaled problem) passes through untouched.
    """
    fields = {
        "x": scaling.d_x * np.asarray(z.x),
        "lam": scaling.d_i * np.asarray(z.lam) / scaling.c_obj,
        "gamma": scaling.d_e * np.asarray(z.gamma) / scaling.c_obj,
        "s": np.asarray(z.s) / scaling.d_i,
    }
    if hasattr(z, "v"):
        fields["v"] = np.asarray(z.v).copy()
    return type(z)(**fields)
