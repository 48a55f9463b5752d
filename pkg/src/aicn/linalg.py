"""Dense symmetric linear algebra and Hessian-metric norms.

Every norm here is taken with respect to a symmetric positive definite
matrix ``H`` (in practice the Hessian at the current point):

* ``hessian_norm(h, H) = sqrt(<H h, h>)``
* ``dual_norm(g, H) = sqrt(<g, H^{-1} g>)``
* ``metric_operator_norm(M, H) = sup_v dual_norm(M v, H) / hessian_norm(v, H)``

Factorizations are delegated to LAPACK through scipy; the positive
definiteness test adds a relative pivot threshold on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite

PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower triangular ``L`` with ``L @ L.T == H``."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def _as_square(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {H.shape}")
    return H


def cholesky(H) -> CholeskyFactor:
    """Factor ``H = L L^T``.

    Raises NotPositiveDefinite if LAPACK rejects the matrix, if it holds
    non-finite entries, or if any pivot ``L_ii^2`` falls below
    ``PIVOT_RTOL * max(diag(H))``.
    """
    H = _as_square(H)
    if not np.all(np.isfinite(H)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        L = scipy.linalg.cholesky(H, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite ({exc})") from None
    pivots = np.diag(L) ** 2
    scale = np.max(np.diag(H)) if H.size else 0.0
    if H.size and (scale <= 0 or np.min(pivots) < PIVOT_RTOL * scale):
        raise NotPositiveDefinite(
            f"smallest pivot {np.min(pivots):.3e} below {PIVOT_RTOL:g} * {scale:.3e}"
        )
    return CholeskyFactor(L)


def _factor(H) -> CholeskyFactor:
    return H if isinstance(H, CholeskyFactor) else cholesky(H)


def solve(F: CholeskyFactor, b) -> np.ndarray:
    """Solve ``H v = b`` given the Cholesky factor of ``H``."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != F.dim:
        raise DimensionMismatch(f"factor is {F.dim}x{F.dim}, rhs has length {b.shape[0]}")
    y = scipy.linalg.solve_triangular(F.lower, b, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(F.lower, y, lower=True, trans="T", check_finite=False)


def hessian_norm(h, H) -> float:
    """``sqrt(<H h, h>)``; ``H`` may be a matrix or a CholeskyFactor."""
    h = np.asarray(h, dtype=float)
    F = _factor(H)
    if h.shape[0] != F.dim:
        raise DimensionMismatch(f"vector of length {h.shape[0]} vs metric of dim {F.dim}")
    # ||L^T h||_2 avoids the cancellation-prone quadratic form
    return float(np.linalg.norm(F.lower.T @ h))


def dual_norm(g, H) -> float:
    """``sqrt(<g, H^{-1} g>)`` via one triangular solve."""
    g = np.asarray(g, dtype=float)
    F = _factor(H)
    if g.shape[0] != F.dim:
        raise DimensionMismatch(f"vector of length {g.shape[0]} vs metric of dim {F.dim}")
    y = scipy.linalg.solve_triangular(F.lower, g, lower=True, check_finite=False)
    return float(np.linalg.norm(y))


def metric_operator_norm(M, H) -> float:
    """Operator norm of symmetric ``M`` from the ``H``-norm to its dual.

    Equals the spectral radius of ``L^{-1} M L^{-T}`` where ``H = L L^T``,
    which is orthogonally similar to ``H^{-1/2} M H^{-1/2}``.
    """
    M = _as_square(M)
    F = _factor(H)
    if M.shape[0] != F.dim:
        raise DimensionMismatch(f"operator of dim {M.shape[0]} vs metric of dim {F.dim}")
    X = scipy.linalg.solve_triangular(F.lower, M, lower=True, check_finite=False)
    C = scipy.linalg.solve_triangular(F.lower, X.T, lower=True, check_finite=False)
    C = 0.5 * (C + C.T)
    eigs = np.linalg.eigvalsh(C)
    return float(np.max(np.abs(eigs))) if eigs.size else 0.0
