"""Precision-generic symmetric-indefinite linear algebra.

Everything the solvers need to solve saddle-point KKT systems lives
here: a symmetric sparse container with an in-place-updatable diagonal,
an LDL' factorization with inertia and signed static regularization, a
preconditioned MINRES, a block-Jacobi preconditioner built from the
spectral absolute value of diagonal blocks, and a cyclic-Jacobi dense
eigensolver for spectrum diagnostics.

All routines run in the container's scalar precision (binary32 or
binary64); only iterative refinement and reported residuals evaluate in
binary64, against the stored (possibly quantized) matrix values.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "SparseSymmetric",
    "Factorization",
    "FactorizationError",
    "KrylovReport",
    "ldlt_factor",
    "ldlt_solve",
    "minres",
    "BlockJacobiPreconditioner",
    "block_jacobi_precond",
    "dense_symmetric_eigenvalues",
]

logger = logging.getLogger(__name__)

_DTYPES = {"f32": np.float32, "f64": np.float64}
_PIVOT_RTOL = 1e-13
_REFINE_RTOL = 1e-10
_EIG_CAP = 500
_EIG_SWEEP_CAP = 60


def precision_dtype(precision: str) -> np.dtype:
    """Map a precision tag ("f32" | "f64") to its numpy dtype."""
    try:
        return np.dtype(_DTYPES[precision])
    except KeyError:
        raise ValueError(f"unknown precision {precision!r}; expected 'f32' or 'f64'") from None


class FactorizationError(ValueError):
    """Factorization failed; carries the inertia seen at failure."""

    def __init__(self, message: str, inertia: tuple[int, int, int]):
        super().__init__(message)
        self.inertia = inertia


class SparseSymmetric:
    """Symmetric matrix stored as a compressed-column lower triangle.

    The diagonal is always structurally present, so solvers can overwrite
    the mutable diagonal entries of a fixed sparsity pattern in place
    between factorizations.  ``reg_signs`` records, per index, the sign
    (+1 primal / -1 dual) that static regularization must add with.
    """

    def __init__(self, lower: sp.csc_matrix, precision: str = "f64", reg_signs: np.ndarray | None = None):
        dtype = precision_dtype(precision)
        n = lower.shape[0]
        if lower.shape != (n, n):
            raise ValueError(f"matrix must be square, got {lower.shape}")
        lower = sp.csc_matrix(lower, dtype=dtype, copy=True)
        lower.sort_indices()
        if (lower != sp.tril(lower)).nnz:
            raise ValueError("storage must contain only the lower triangle")
        self._lower = _with_explicit_diagonal(lower, dtype)
        self._diag_pos = self._lower.indptr[:-1].copy()
        if n and not np.array_equal(self._lower.indices[self._diag_pos], np.arange(n)):
            raise AssertionError("diagonal entries not leading their columns")
        self.precision = precision
        self.dtype = dtype
        self.reg_signs = np.ones(n) if reg_signs is None else np.asarray(reg_signs, dtype=np.float64).copy()
        if self.reg_signs.shape != (n,):
            raise ValueError(f"reg_signs shape {self.reg_signs.shape} does not match dimension {n}")
        self._full: sp.csc_matrix | None = None

    @staticmethod
    def from_full(full, precision: str = "f64", reg_signs: np.ndarray | None = None) -> "SparseSymmetric":
        """Build from a full symmetric matrix (keeps its lower triangle)."""
        full = sp.csc_matrix(full)
        return SparseSymmetric(sp.tril(full, format="csc"), precision=precision, reg_signs=reg_signs)

    @property
    def dimension(self) -> int:
        return self._lower.shape[0]

    @property
    def lower(self) -> sp.csc_matrix:
        return self._lower

    def diagonal(self) -> np.ndarray:
        return self._lower.data[self._diag_pos].copy()

    def update_diagonal(self, values: np.ndarray, start: int = 0) -> None:
        """Overwrite a contiguous run of diagonal entries in place."""
        values = np.asarray(values)
        stop = start + values.shape[0]
        if start < 0 or stop > self.dimension:
            raise ValueError(f"diagonal update [{start}, {stop}) outside dimension {self.dimension}")
        self._lower.data[self._diag_pos[start:stop]] = values.astype(self.dtype)
        self._full = None

    def copy(self) -> "SparseSymmetric":
        """Deep copy; later in-place updates to either never alias."""
        return SparseSymmetric(self._lower.copy(), precision=self.precision, reg_signs=self.reg_signs)

    def full(self) -> sp.csc_matrix:
        """Full symmetric matrix (cached until the diagonal changes)."""
        if self._full is None:
            strict = sp.tril(self._lower, k=-1, format="csc")
            self._full = (self._lower + strict.T).tocsc()
        return self._full

    def to_dense(self) -> np.ndarray:
        return self.full().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.full() @ x.astype(self.dtype, copy=False)

    def inf_norm(self) -> float:
        """Induced infinity norm (max absolute row sum), in binary64."""
        full = self.full()
        if not full.nnz:
            return 0.0
        return float(np.max(abs(full).astype(np.float64).sum(axis=1)))


def _with_explicit_diagonal(lower: sp.csc_matrix, dtype) -> sp.csc_matrix:
    n = lower.shape[0]
    coo = lower.tocoo()
    rows = np.concatenate([coo.row, np.arange(n)])
    cols = np.concatenate([coo.col, np.arange(n)])
    data = np.concatenate([coo.data, np.zeros(n, dtype=dtype)])
    out = sp.csc_matrix((data, (rows, cols)), shape=(n, n), dtype=dtype)
    out.sum_duplicates()
    out.sort_indices()
    return out


@dataclasses.dataclass(frozen=True)
class Factorization:
    """An LDL' factorization P M P' = L D L' with Bunch-Kaufman pivoting.

    Attributes:
        matrix: the container that was factored (unregularized values).
        L: unit lower-triangular factor, dense, in factor precision.
        d_diag: main diagonal of the block-diagonal D.
        d_sub: subdiagonal of D; a nonzero entry at i marks a 2x2 pivot
            coupling permuted indices (i, i+1).
        perm: permutation such that M[perm][:, perm] = L D L'.
        inertia: (positive, negative, zero) eigenvalue counts of D.
        regularization: magnitude of the signed static shift actually
            applied (0.0 when the first factorization succeeded).
        precision: scalar precision tag of the factorization.
    """

    matrix: SparseSymmetric
    L: np.ndarray
    d_diag: np.ndarray
    d_sub: np.ndarray
    perm: np.ndarray
    inertia: tuple[int, int, int]
    regularization: float
    precision: str

    @property
    def dimension(self) -> int:
        return self.perm.shape[0]


def _ldl_once(dense: np.ndarray):
    # scipy returns A = lu @ d @ lu.T with d already block diagonal in
    # factor order; only lu needs its rows permuted into triangular form,
    # giving M[perm][:, perm] = L d L'.
    lu, d, perm = scipy.linalg.ldl(dense, lower=True)
    L = lu[perm, :]
    d_diag = np.diag(d).copy()
    d_sub = np.zeros(max(dense.shape[0] - 1, 0), dtype=dense.dtype)
    if d_sub.size:
        d_sub[:] = np.diag(d, k=-1)
    return L, d_diag, d_sub, np.asarray(perm)


def _pivot_stats(d_diag: np.ndarray, d_sub: np.ndarray):
    """Per-pivot magnitudes and the inertia of D."""
    n = d_diag.shape[0]
    magnitudes = []
    pos = neg = zero = 0
    i = 0
    while i < n:
        if i < n - 1 and d_sub[i] != 0.0:
            a, b, c = float(d_diag[i]), float(d_diag[i + 1]), float(d_sub[i])
            mean = 0.5 * (a + b)
            radius = np.hypot(0.5 * (a - b), c)
            eigs = (mean - radius, mean + radius)
            magnitudes.append(min(abs(eigs[0]), abs(eigs[1])))
            for w in eigs:
                if w > 0.0:
                    pos += 1
                elif w < 0.0:
                    neg += 1
                else:
                    zero += 1
            i += 2
        else:
            piv = float(d_diag[i])
            magnitudes.append(abs(piv))
            if piv > 0.0:
                pos += 1
            elif piv < 0.0:
                neg += 1
            else:
                zero += 1
            i += 1
    return magnitudes, (pos, neg, zero)


def ldlt_factor(M: SparseSymmetric, static_reg: float | None = None) -> Factorization:
    """Factor a symmetric (possibly indefinite) matrix as P M P' = L D L'.

    If any pivot magnitude falls below 1e-13 times the largest diagonal
    magnitude (or is exactly zero), the matrix is refactored once with the
    signed static shift ``static_reg * diag(reg_signs)`` added.

    Args:
        M: matrix to factor (factored in its own precision).
        static_reg: shift magnitude; defaults to 1e-9 * inf-norm of M.

    Returns:
        A :class:`Factorization` carrying factors, inertia, and the
        regularization magnitude used.

    Raises:
        FactorizationError: still singular after regularization; the
            exception carries the inertia observed.
    """
    dense = M.to_dense()
    if not np.all(np.isfinite(dense)):
        raise FactorizationError("non-finite entries in matrix to factor", (0, 0, M.dimension))
    L, d_diag, d_sub, perm = _ldl_once(dense)
    magnitudes, inertia = _pivot_stats(d_diag, d_sub)
    scale = float(np.max(np.abs(np.diag(dense)), initial=0.0))
    threshold = _PIVOT_RTOL * scale
    regularization = 0.0
    if magnitudes and min(magnitudes) <= threshold:
        regularization = float(static_reg) if static_reg is not None else 1e-9 * M.inf_norm()
        logger.debug(
            "pivot magnitude %.3e below threshold %.3e; refactoring with signed shift %.3e",
            min(magnitudes),
            threshold,
            regularization,
        )
        shifted = dense + np.diag((regularization * M.reg_signs).astype(dense.dtype))
        L, d_diag, d_sub, perm = _ldl_once(shifted)
        magnitudes, inertia = _pivot_stats(d_diag, d_sub)
        if inertia[2] > 0:
            raise FactorizationError(
                f"matrix singular even after static regularization {regularization:.3e}; inertia {inertia}",
                inertia,
            )
    return Factorization(
        matrix=M,
        L=L,
        d_diag=d_diag,
        d_sub=d_sub,
        perm=perm,
        inertia=inertia,
        regularization=regularization,
        precision=M.precision,
    )


def _block_diag_solve(d_diag: np.ndarray, d_sub: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    n = d_diag.shape[0]
    two = np.flatnonzero(d_sub) if d_sub.size else np.array([], dtype=int)
    in_block = np.zeros(n, dtype=bool)
    in_block[two] = True
    in_block[two + 1] = True
    ones = ~in_block
    out[ones] = y[ones] / d_diag[ones]
    if two.size:
        a = d_diag[two]
        b = d_diag[two + 1]
        c = d_sub[two]
        det = a * b - c * c
        out[two] = (b * y[two] - c * y[two + 1]) / det
        out[two + 1] = (a * y[two + 1] - c * y[two]) / det
    return out


def _apply_factors(F: Factorization, rhs: np.ndarray) -> np.ndarray:
    w = rhs[F.perm]
    y = scipy.linalg.solve_triangular(F.L, w, lower=True, unit_diagonal=True)
    u = _block_diag_solve(F.d_diag, F.d_sub, y)
    t = scipy.linalg.solve_triangular(F.L.T, u, lower=False, unit_diagonal=True)
    x = np.empty_like(t)
    x[F.perm] = t
    return x


def ldlt_solve(F: Factorization, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs using a factorization of M.

    The triangular solves run in the factorization's precision; the
    residual check and one step of iterative refinement (taken when the
    relative residual exceeds 1e-10) run in binary64 against the stored
    matrix values.  The result is always binary64.

    Raises:
        ValueError: non-finite right-hand side, or NaN appearing in the
            solve.
    """
    rhs64 = np.asarray(rhs, dtype=np.float64).reshape(-1)
    if rhs64.shape != (F.dimension,):
        raise ValueError(f"rhs shape {rhs64.shape} does not match dimension {F.dimension}")
    if rhs64.size and not np.all(np.isfinite(rhs64)):
        raise ValueError("non-finite right-hand side")
    dtype = precision_dtype(F.precision)
    x = _apply_factors(F, rhs64.astype(dtype)).astype(np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("NaN/Inf produced during triangular solve")
    rhs_norm = float(np.max(np.abs(rhs64), initial=0.0))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs64)
    # Refinement runs start to finish in the factorization's own precision:
    # the solve must not be more accurate than its storage precision allows,
    # so a binary32 factorization gets a binary32 residual, not a binary64
    # rescue of its rounding error.
    residual = rhs64.astype(dtype) - F.matrix.full() @ x.astype(dtype)
    if float(np.max(np.abs(residual), initial=0.0)) / rhs_norm > _REFINE_RTOL:
        correction = _apply_factors(F, residual).astype(np.float64)
        if not np.all(np.isfinite(correction)):
            raise ValueError("NaN/Inf produced during iterative refinement")
        x = x + correction
    return x


@dataclasses.dataclass(frozen=True)
class KrylovReport:
    """Outcome of one MINRES solve.

    Attributes:
        iterations: Krylov iterations performed.
        relative_residual: final preconditioned residual over the initial one.
        converged: whether the stopping tolerance was met.
        residual_norms: preconditioned residual norm per iteration,
            starting with the initial norm (non-increasing).
    """

    iterations: int
    relative_residual: float
    converged: bool
    residual_norms: tuple[float, ...]


def _as_operator(op) -> Callable[[np.ndarray], np.ndarray]:
    if op is None:
        return lambda vec: vec
    if callable(op) and not sp.issparse(op) and not isinstance(op, np.ndarray):
        return op
    if isinstance(op, SparseSymmetric):
        return op.matvec
    mat = op
    return lambda vec: mat @ vec


def minres(
    apply_M,
    rhs: np.ndarray,
    precond=None,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    max_iters: int | None = None,
) -> tuple[np.ndarray, KrylovReport]:
    """Minimum-residual solve of a symmetric (indefinite) system.

    Runs the Lanczos-based minimum-residual recurrence with an optional
    symmetric positive definite preconditioner, in the precision of the
    right-hand side.  Stops when the preconditioned residual norm drops
    to max(rtol * initial norm, atol).

    Args:
        apply_M: symmetric operator (callable, array, sparse matrix, or
            SparseSymmetric).
        rhs: right-hand side vector.
        precond: SPD preconditioning operator (applies an approximate
            inverse); None for identity.
        rtol: relative tolerance on the preconditioned residual.
        atol: absolute tolerance on the preconditioned residual.
        max_iters: iteration cap; defaults to 5 * dimension.

    Returns:
        (solution, KrylovReport).

    Raises:
        ValueError: NaN encountered (reported with its iteration index),
            or a preconditioner that is not positive definite.
    """
    A = _as_operator(apply_M)
    P = _as_operator(precond)
    b = np.asarray(rhs)
    dtype = b.dtype if b.dtype in (np.float32, np.float64) else np.float64
    cast = np.dtype(dtype).type
    b = b.astype(dtype, copy=True)
    n = b.shape[0]
    if max_iters is None:
        max_iters = max(5 * n, 20)

    x = np.zeros(n, dtype=dtype)
    r1 = b.copy()
    y = np.asarray(P(r1), dtype=dtype)
    beta1_sq = float(r1 @ y)
    if beta1_sq < 0.0:
        raise ValueError("preconditioner is not positive definite (negative inner product)")
    beta1 = float(np.sqrt(beta1_sq))
    if beta1 == 0.0:
        return x, KrylovReport(iterations=0, relative_residual=0.0, converged=True, residual_norms=(0.0,))

    oldb = 0.0
    beta = beta1
    dbar = epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros(n, dtype=dtype)
    w2 = np.zeros(n, dtype=dtype)
    r2 = r1
    norms = [beta1]
    tiny = float(np.finfo(dtype).tiny) * 100.0
    converged = False
    itn = 0
    while itn < max_iters:
        itn += 1
        v = y / cast(beta)
        y = np.asarray(A(v), dtype=dtype)
        if itn >= 2:
            y = y - cast(beta / oldb) * r1
        alfa = float(v @ y)
        y = y - cast(alfa / beta) * r2
        r1 = r2
        r2 = y
        y = np.asarray(P(r2), dtype=dtype)
        oldb = beta
        beta_sq = float(r2 @ y)
        if beta_sq < 0.0:
            raise ValueError(f"preconditioner is not positive definite (iteration {itn})")
        beta = float(np.sqrt(beta_sq))

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(float(np.hypot(gbar, beta)), tiny)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1 = w2
        w2 = w
        w = (v - cast(oldeps) * w1 - cast(delta) * w2) / cast(gamma)
        x = x + cast(phi) * w

        if not np.isfinite(phibar) or not np.all(np.isfinite(x)):
            raise ValueError(f"NaN/Inf encountered in Krylov iteration {itn}")
        norms.append(abs(phibar))
        if abs(phibar) <= max(rtol * beta1, atol):
            converged = True
            break
        if beta <= tiny:
            # Lanczos breakdown: Krylov space exhausted; whatever residual
            # remains is final, so fall back to the convergence test.
            converged = abs(phibar) <= max(rtol * beta1, atol)
            break
    return x.astype(np.float64), KrylovReport(
        iterations=itn,
        relative_residual=float(abs(phibar) / beta1),
        converged=converged,
        residual_norms=tuple(float(t) for t in norms),
    )


class BlockJacobiPreconditioner:
    """Inverse of the block-diagonal spectral absolute value of a matrix.

    Each diagonal block B of the source matrix is replaced by inv(|B|)
    where |B| has B's eigenvectors and absolute eigenvalues — symmetric
    positive definite by construction, so MINRES accepts it.  Singular
    blocks fall back to the identity and are recorded in ``notes``.
    """

    def __init__(self, dimension: int, dtype, pieces, notes: tuple[str, ...]):
        self.dimension = dimension
        self.dtype = dtype
        self._pieces = pieces  # list of (start, stop, inverse-or-None, diag-or-None)
        self.notes = notes

    def __call__(self, vec: np.ndarray) -> np.ndarray:
        out = np.array(vec, dtype=self.dtype, copy=True)
        for start, stop, inv, diag in self._pieces:
            if diag is not None:
                out[start:stop] = vec[start:stop] * diag
            elif inv is not None:
                out[start:stop] = inv @ vec[start:stop]
        return out


def block_jacobi_precond(M: SparseSymmetric, blocks: Sequence[tuple[int, int]]) -> BlockJacobiPreconditioner:
    """Build the block-Jacobi preconditioner for a partitioned matrix.

    Args:
        M: source matrix.
        blocks: partition of [0, dimension) as (start, stop) pairs, in
            order, covering every index (solvers pass the primal /
            inequality / equality split).

    Returns:
        An SPD operator applying inv(|diag-block|) per block; blocks that
        are singular (smallest |eigenvalue| below 1e-14 of the largest, or
        all zero) apply the identity instead, with a warning note.

    Raises:
        ValueError: blocks do not partition the index range.
    """
    n = M.dimension
    expected = 0
    for start, stop in blocks:
        if start != expected or stop < start:
            raise ValueError(f"blocks must cover [0, {n}) contiguously; got block ({start}, {stop})")
        expected = stop
    if expected != n:
        raise ValueError(f"blocks cover [0, {expected}), matrix has dimension {n}")

    dense = None
    pieces = []
    notes: list[str] = []
    diag_full = M.diagonal().astype(np.float64)
    for start, stop in blocks:
        size = stop - start
        if size == 0:
            continue
        sub_is_diagonal = _block_is_diagonal(M, start, stop)
        if sub_is_diagonal:
            absdiag = np.abs(diag_full[start:stop])
            maxw = float(np.max(absdiag, initial=0.0))
            if maxw == 0.0 or np.min(absdiag) <= 1e-14 * maxw:
                notes.append(f"block ({start}, {stop}) singular; using identity")
                logger.warning("block-Jacobi: block (%d, %d) singular, replaced by identity", start, stop)
                pieces.append((start, stop, None, np.ones(size, dtype=M.dtype)))
            else:
                pieces.append((start, stop, None, (1.0 / absdiag).astype(M.dtype)))
            continue
        if dense is None:
            dense = M.to_dense().astype(np.float64)
        block = dense[start:stop, start:stop]
        w, V = np.linalg.eigh(block)
        absw = np.abs(w)
        maxw = float(np.max(absw, initial=0.0))
        if maxw == 0.0 or np.min(absw) <= 1e-14 * maxw:
            notes.append(f"block ({start}, {stop}) singular; using identity")
            logger.warning("block-Jacobi: block (%d, %d) singular, replaced by identity", start, stop)
            pieces.append((start, stop, None, np.ones(size, dtype=M.dtype)))
        else:
            inv = (V / absw) @ V.T
            pieces.append((start, stop, inv.astype(M.dtype), None))
    return BlockJacobiPreconditioner(n, M.dtype, pieces, tuple(notes))


def _block_is_diagonal(M: SparseSymmetric, start: int, stop: int) -> bool:
    lower = M.lower
    for col in range(start, stop):
        rows = lower.indices[lower.indptr[col] : lower.indptr[col + 1]]
        inside = rows[(rows >= start) & (rows < stop)]
        if inside.size and np.any(inside != col):
            return False
    return True


def dense_symmetric_eigenvalues(M: np.ndarray, dimension_cap: int = _EIG_CAP) -> np.ndarray:
    """All eigenvalues of a dense symmetric matrix, sorted ascending.

    Diagonalizes by cyclic Jacobi rotations until the off-diagonal
    Frobenius norm falls below 1e-12 of the matrix norm.  Diagnostics
    only — cost grows cubically, hence the dimension cap.

    Raises:
        ValueError: dimension exceeds the cap (advice: disable spectrum
            tracing), asymmetric input, or no convergence within the
            sweep budget.
    """
    A = np.array(M, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n > dimension_cap:
        raise ValueError(
            f"eigenvalue extraction capped at dimension {dimension_cap}, got {n}; "
            "disable spectrum tracing for problems this large"
        )
    if n and float(np.max(np.abs(A - A.T))) > 1e-8 * max(float(np.max(np.abs(A))), 1.0):
        raise ValueError("matrix is not symmetric")
    if n == 0:
        return np.zeros(0)
    A = 0.5 * (A + A.T)
    fro = float(np.linalg.norm(A))
    if fro == 0.0:
        return np.zeros(n)
    target = 1e-12 * fro
    for _ in range(_EIG_SWEEP_CAP):
        # Norm of the off-diagonal part measured directly; forming it as
        # ||A||^2 - ||diag||^2 cancels catastrophically and floors near
        # sqrt(eps)*||A||, far above the 1e-12 relative target.
        strict = A - np.diag(np.diag(A))
        off = float(np.linalg.norm(strict))
        if off <= target:
            return np.sort(np.diag(A))
        negligible = target / max(n, 1)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= negligible:
                    # Too small to lift the off-diagonal norm above the
                    # target; annihilating it directly avoids overflow in
                    # the rotation angle when the diagonal gap is huge.
                    A[p, q] = A[q, p] = 0.0
                    continue
                gap = A[q, q] - A[p, p]
                if abs(gap) + 100.0 * abs(apq) == abs(gap):
                    t = apq / gap
                else:
                    theta = gap / (2.0 * apq)
                    sgn = 1.0 if theta >= 0.0 else -1.0
                    t = sgn / (abs(theta) + float(np.hypot(theta, 1.0)))
                c = 1.0 / float(np.sqrt(1.0 + t * t))
                s_ = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s_ * col_q
                A[:, q] = s_ * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s_ * row_q
                A[q, :] = s_ * row_p + c * row_q
    raise ValueError(
        "Jacobi eigenvalue sweep budget exhausted without convergence; disable spectrum tracing for this matrix"
    )
