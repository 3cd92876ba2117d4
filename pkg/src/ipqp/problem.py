"""Convex quadratic program representation and KKT residuals.

Problems have the shape

    minimize    1/2 x'Qx + q'x
    subject to  Ax >= b          (m inequality rows, dual lambda >= 0)
                Cx  = d          (p equality rows, dual gamma)

with Q positive semidefinite.  Either constraint block may be empty.
This module owns the problem container, the first-order optimality
residual, and the duality gap; both solver formulations consume these.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse as sp

__all__ = [
    "QpProblem",
    "ExplicitIterate",
    "ImplicitIterate",
    "ResidualVector",
    "residuals",
    "duality_gap",
]

_SYMMETRY_RTOL = 1e-12


def _csc(mat, shape: tuple[int, int], name: str) -> sp.csc_matrix:
    # scipy's shape= kwarg silently zero-pads a smaller input, so the
    # incoming shape must be checked before conversion.
    given = np.shape(mat) if not sp.issparse(mat) else mat.shape
    if tuple(given) != shape:
        raise ValueError(f"{name} has shape {tuple(given)}, expected {shape}")
    out = sp.csc_matrix(mat, shape=shape, dtype=np.float64, copy=True)
    out.sort_indices()
    if not np.all(np.isfinite(out.data)):
        raise ValueError(f"non-finite entry in {name}")
    return out


def _vec(arr, size: int, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64).reshape(-1).copy()
    if out.shape != (size,):
        raise ValueError(f"{name} has shape {out.shape}, expected ({size},)")
    if size and not np.all(np.isfinite(out)):
        raise ValueError(f"non-finite entry in {name}")
    return out


@dataclasses.dataclass(frozen=True)
class QpProblem:
    """Immutable convex QP data.

    Attributes:
        Q: n-by-n symmetric PSD cost matrix (stored with both triangles).
        q: linear cost, n-vector.
        A: inequality matrix, m-by-n (rows of Ax >= b).
        b: inequality right-hand side, m-vector.
        C: equality matrix, p-by-n.
        d: equality right-hand side, p-vector.
        name: optional instance label carried into traces and reports.
        objective_constant: additive constant of the objective (affects
            reported objective values only, never the solution).
    """

    Q: sp.csc_matrix
    q: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    C: sp.csc_matrix
    d: np.ndarray
    name: str = ""
    objective_constant: float = 0.0

    @staticmethod
    def build(Q, q, A=None, b=None, C=None, d=None, name: str = "", objective_constant: float = 0.0) -> "QpProblem":
        """Validate, symmetrize, and freeze problem data.

        Q is symmetrized as (Q + Q')/2; asymmetry beyond 1e-12 relative to
        the largest entry is an error.  A/C default to empty (0-by-n).

        Raises:
            ValueError: on inconsistent dimensions, non-finite data, or a
                materially asymmetric Q.
        """
        q_arr = np.asarray(q, dtype=np.float64).reshape(-1)
        n = q_arr.shape[0]
        Q_mat = _csc(Q, (n, n), "Q")
        asym = abs(Q_mat - Q_mat.T)
        max_entry = max(np.max(np.abs(Q_mat.data)) if Q_mat.nnz else 0.0, 1.0)
        if asym.nnz and asym.max() > _SYMMETRY_RTOL * max_entry:
            raise ValueError(f"Q is asymmetric: max |Q - Q'| entry {asym.max():.3e} exceeds {_SYMMETRY_RTOL:g}*max|Q|")
        Q_mat = _csc((Q_mat + Q_mat.T) * 0.5, (n, n), "Q")

        b_arr = np.asarray([] if b is None else b, dtype=np.float64).reshape(-1)
        m = b_arr.shape[0]
        A_mat = _csc(sp.csc_matrix((m, n)) if A is None else A, (m, n), "A")
        d_arr = np.asarray([] if d is None else d, dtype=np.float64).reshape(-1)
        p = d_arr.shape[0]
        C_mat = _csc(sp.csc_matrix((p, n)) if C is None else C, (p, n), "C")
        return QpProblem(
            Q=Q_mat,
            q=_vec(q_arr, n, "q"),
            A=A_mat,
            b=_vec(b_arr, m, "b"),
            C=C_mat,
            d=_vec(d_arr, p, "d"),
            name=name,
            objective_constant=float(objective_constant),
        )

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def p(self) -> int:
        return self.d.shape[0]

    def objective(self, x: np.ndarray) -> float:
        """Evaluate 1/2 x'Qx + q'x plus the additive constant."""
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * x @ (self.Q @ x) + self.q @ x + self.objective_constant)


@dataclasses.dataclass
class ExplicitIterate:
    """State of the explicit solver: primal x, duals (lambda, gamma), slack s.

    lambda and s stay strictly positive at every accepted iterate.
    """

    x: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    s: np.ndarray


@dataclasses.dataclass
class ImplicitIterate:
    """State of the implicit solver: x, duals, slack, and the auxiliary v.

    lambda and s are derived views b_mu(v), b_mu(-v) kept in sync with v;
    v itself is unconstrained but finite.
    """

    x: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    s: np.ndarray
    v: np.ndarray


@dataclasses.dataclass(frozen=True)
class ResidualVector:
    """First-order residual blocks at an iterate.

    Attributes:
        r_x: stationarity residual, n-vector.
        r_i: inequality feasibility residual Ax - b - s, m-vector.
        r_e: equality feasibility residual Cx - d, p-vector.
        r_comp: complementarity-family residual; lambda*s - mu for the
            explicit formulation, the stacked retraction residuals for the
            implicit one.
    """

    r_x: np.ndarray
    r_i: np.ndarray
    r_e: np.ndarray
    r_comp: np.ndarray

    def block_inf_norms(self) -> tuple[float, float, float, float]:
        """Infinity norm of each block (empty blocks report 0)."""
        return tuple(_inf(block) for block in (self.r_x, self.r_i, self.r_e, self.r_comp))

    @property
    def inf_norm(self) -> float:
        """Infinity norm of the full stacked residual."""
        return max(self.block_inf_norms())


def _inf(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def _named_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite entry in {name}")
    return arr


def residuals(problem: QpProblem, z: ExplicitIterate, mu: float) -> ResidualVector:
    """Evaluate the (relaxed) KKT residual at an iterate.

    With mu = 0 this is the unrelaxed optimality residual; mu > 0 shifts
    only the complementarity block, by exactly -mu per entry.

    Args:
        problem: the QP being solved.
        z: iterate carrying x, lam, gamma, s.
        mu: complementarity relaxation, >= 0.

    Returns:
        ResidualVector with blocks (Qx + q - A'lam - C'gamma,
        Ax - b - s, Cx - d, lam*s - mu).

    Raises:
        ValueError: dimension mismatch, negative mu, or NaN/Inf in any
            input block (the error names the block).
    """
    if mu < 0.0 or not np.isfinite(mu):
        raise ValueError(f"mu must be finite and >= 0, got {mu!r}")
    x = _named_finite(np.asarray(z.x, dtype=np.float64), "x")
    lam = _named_finite(np.asarray(z.lam, dtype=np.float64), "lam")
    gamma = _named_finite(np.asarray(z.gamma, dtype=np.float64), "gamma")
    s = _named_finite(np.asarray(z.s, dtype=np.float64), "s")
    if x.shape != (problem.n,) or lam.shape != (problem.m,) or gamma.shape != (problem.p,) or s.shape != (problem.m,):
        raise ValueError(
            f"iterate dimensions {x.shape}/{lam.shape}/{gamma.shape}/{s.shape} do not match "
            f"problem (n={problem.n}, m={problem.m}, p={problem.p})"
        )
    r_x = problem.Q @ x + problem.q - problem.A.T @ lam - problem.C.T @ gamma
    r_i = problem.A @ x - problem.b - s
    r_e = problem.C @ x - problem.d
    r_comp = lam * s - mu
    return ResidualVector(r_x=r_x, r_i=r_i, r_e=r_e, r_comp=r_comp)


def duality_gap(lam: np.ndarray, s: np.ndarray) -> float:
    """Return lam's, the total complementarity gap (0 when m = 0)."""
    lam = np.asarray(lam, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if lam.shape != s.shape:
        raise ValueError(f"lam shape {lam.shape} != s shape {s.shape}")
    if lam.size == 0:
        return 0.0
    return float(lam @ s)
