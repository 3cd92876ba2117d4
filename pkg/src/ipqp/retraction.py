"""Complementarity retraction maps.

The implicit solver replaces each complementarity pair (lambda_i, s_i) by a
single unconstrained variable v_i through a positive map b_mu satisfying

    b_mu(v) * b_mu(-v) = mu        for every v,

so that lambda = b_mu(v), s = b_mu(-v) meets the relaxed complementarity
condition identically.  The production map is the softplus-family root

    b_mu(v) = (v + sqrt(v^2 + 4 mu)) / 2,

whose derivative lies strictly in (0, 1).  Both are evaluated here in
cancellation-free branches: the naive formula loses all precision on the
small side of the pair (v << 0 for b, v >> 0 for b(-v)), while the
algebraically equivalent form 2 mu / (sqrt(v^2 + 4 mu) + |v|) does not.
The square root itself goes through ``hypot`` so v^2 never overflows.

Everything is dtype-generic: feed float32 arrays to evaluate in binary32.
An exponential map sqrt(mu) * exp(v) is kept for diagnostics comparisons
only; the solvers never touch it.
"""

from __future__ import annotations

import dataclasses

import numpy as np

__all__ = [
    "RetractionEval",
    "softplus",
    "softplus_derivative",
    "evaluate_retraction",
    "exponential_map",
]


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not np.isfinite(mu) or mu <= 0.0:
        raise ValueError(f"retraction barrier parameter must be positive and finite, got mu={mu!r}")
    return mu


def _as_float_array(v, name: str = "v") -> np.ndarray:
    arr = np.asarray(v)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    if arr.size and not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(np.atleast_1d(arr)))[0]
        raise ValueError(f"non-finite entry in {name} at index {tuple(bad)}: cannot evaluate retraction")
    return arr


def _root(v: np.ndarray, mu: float) -> np.ndarray:
    # sqrt(v^2 + 4 mu) without intermediate overflow for |v| beyond 1e154
    two_sqrt_mu = v.dtype.type(2.0) * np.sqrt(v.dtype.type(mu))
    return np.hypot(v, two_sqrt_mu)


@dataclasses.dataclass(frozen=True)
class RetractionEval:
    """Vectorized retraction evaluation at a point v.

    Attributes:
        b_plus: b_mu(v) element-wise.
        b_minus: b_mu(-v) element-wise.
        db_plus: derivative db_mu(v), strictly inside (0, 1).
        db_minus: derivative db_mu(-v); db_plus + db_minus = 1.
        mu: the barrier parameter the evaluation used.
    """

    b_plus: np.ndarray
    b_minus: np.ndarray
    db_plus: np.ndarray
    db_minus: np.ndarray
    mu: float


def softplus(v, mu):
    """Evaluate b_mu(v) = (v + sqrt(v^2 + 4 mu)) / 2 stably.

    For v < 0 the equivalent form 2 mu / (sqrt(v^2 + 4 mu) - v) is used, which
    has no cancellation.  Accepts scalars or arrays; the computation runs in
    the input's floating dtype (binary32 in, binary32 out).

    Args:
        v: point(s) of evaluation, finite.
        mu: barrier parameter, > 0.

    Returns:
        b_mu(v) > 0, matching the shape of ``v``.
    """
    mu = _check_mu(mu)
    arr = _as_float_array(v)
    root = _root(arr, mu)
    half = arr.dtype.type(0.5)
    two_mu = arr.dtype.type(2.0) * arr.dtype.type(mu)
    # root + |v| serves both stable branches and never cancels
    den = root + np.abs(arr)
    big = (np.abs(arr) + root) * half
    small = two_mu / den
    out = np.where(arr >= 0, big, small)
    if np.ndim(v) == 0:
        return float(out)
    return out


def softplus_derivative(v, mu):
    """Evaluate db_mu(v) = (1 + v / sqrt(v^2 + 4 mu)) / 2, strictly in (0, 1).

    Uses the identity db_mu(v) = b_mu(v) / sqrt(v^2 + 4 mu), so the stable
    branches of :func:`softplus` carry over and the small side stays positive
    instead of rounding to zero.
    """
    mu = _check_mu(mu)
    arr = _as_float_array(v)
    root = _root(arr, mu)
    half = arr.dtype.type(0.5)
    two_mu = arr.dtype.type(2.0) * arr.dtype.type(mu)
    den = root + np.abs(arr)
    big = (np.abs(arr) + root) * half
    small = two_mu / den
    out = np.where(arr >= 0, big, small) / root
    if np.ndim(v) == 0:
        return float(out)
    return out


def evaluate_retraction(v, mu) -> RetractionEval:
    """Evaluate the retraction pair and both derivatives in one pass.

    One hypot serves all four outputs: with r = sqrt(v^2 + 4 mu), the larger
    of the pair is (|v| + r)/2, the smaller is 2 mu / (r + |v|), and each
    derivative is the corresponding value divided by r.

    Args:
        v: m-vector (m may be 0), finite entries.
        mu: barrier parameter, > 0.

    Returns:
        A :class:`RetractionEval` satisfying b_plus * b_minus = mu,
        db_plus + db_minus = 1, and b_plus - b_minus = v to rounding.
    """
    mu = _check_mu(mu)
    arr = np.atleast_1d(_as_float_array(v))
    root = _root(arr, mu)
    half = arr.dtype.type(0.5)
    two_mu = arr.dtype.type(2.0) * arr.dtype.type(mu)
    den = root + np.abs(arr)
    big = (np.abs(arr) + root) * half
    small = two_mu / den
    pos = arr >= 0
    b_plus = np.where(pos, big, small)
    b_minus = np.where(pos, small, big)
    return RetractionEval(
        b_plus=b_plus,
        b_minus=b_minus,
        db_plus=b_plus / root,
        db_minus=b_minus / root,
        mu=mu,
    )


def exponential_map(v, mu):
    """Evaluate the comparison map sqrt(mu) * exp(v).

    Diagnostics-only: under a barrier update mu -> sigma * mu this map
    rescales by sqrt(sigma) uniformly, which is what traces compare against.
    The production solvers never accept a retraction choice.

    Raises:
        OverflowError: when exp(v) overflows, naming the offending v.
    """
    mu = _check_mu(mu)
    arr = _as_float_array(v)
    with np.errstate(over="ignore"):
        out = np.sqrt(arr.dtype.type(mu)) * np.exp(arr)
    if not np.all(np.isfinite(out)):
        bad = np.atleast_1d(arr)[~np.isfinite(np.atleast_1d(out))][0]
        raise OverflowError(f"exponential map overflowed at v={bad!r}; map saturates for large v")
    if np.ndim(v) == 0:
        return float(out)
    return out
