"""Small dense linear-algebra kernels shared by the whole package.

Everything operates on 2-D float64 numpy arrays.  The heavy lifting
(products, Cholesky) is delegated to BLAS/LAPACK through numpy and scipy;
these wrappers add shape validation, the exact-symmetry guarantee for Gram
matrices, and the positive-definiteness error contract the ridge solver
relies on.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotrs


class NotPositiveDefiniteError(ValueError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index: int, context: str = ""):
        self.pivot_index = pivot_index
        message = f"matrix is not positive definite (failing pivot {pivot_index})"
        if context:
            message = f"{message} {context}"
        super().__init__(message)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D C-contiguous float64 array with finite entries."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains non-finite entries")
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product a @ b with explicit conformance checking."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(
            f"matmul dimension mismatch: {getattr(a, 'shape', '?')} times "
            f"{getattr(b, 'shape', '?')}"
        )
    return a @ b


def gram(h: np.ndarray) -> np.ndarray:
    """HᵀH, averaged with its transpose so the result is exactly symmetric."""
    if h.ndim != 2 or h.size == 0:
        raise ValueError(f"gram needs a nonempty 2-D matrix, got shape {h.shape}")
    g = h.T @ h
    # IEEE addition commutes, so (g + g.T)/2 is bitwise symmetric.
    return (g + g.T) * 0.5


def cholesky_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a·Z = b for symmetric positive definite a.

    Factors a once (LAPACK ``dpotrf``) and applies two triangular solves
    (``dpotrs``); no explicit inverse is ever formed.  Inputs are not
    mutated.

    Raises:
        NotPositiveDefiniteError: a non-positive pivot was hit during the
            factorization; carries the zero-based pivot index.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"cholesky_solve needs a square matrix, got {a.shape}")
    if b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError(f"cholesky_solve shape mismatch: {a.shape} vs {b.shape}")
    c, info = dpotrf(a, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise ValueError(f"invalid argument {-info} passed to dpotrf")
    z, info = dpotrs(c, b, lower=1)
    if info != 0:
        raise ValueError(f"dpotrs failed with status {info}")
    return z


def ridge_solve(h: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Closed-form ridge regression: solve (HᵀH + λI)·W = HᵀY.

    Returns the (h.cols × y.cols) minimizer of ‖HW − Y‖² + λ‖W‖².  With
    λ = 0 this degenerates to ordinary least squares and requires HᵀH to
    be nonsingular.
    """
    if h.ndim != 2 or y.ndim != 2 or h.shape[0] != y.shape[0]:
        raise ValueError(f"ridge_solve shape mismatch: h is {h.shape}, y is {y.shape}")
    if lam < 0:
        raise ValueError(f"regularizer must be nonnegative, got {lam}")
    g = gram(h)
    if lam:
        g[np.diag_indices_from(g)] += lam
    return cholesky_solve(g, h.T @ y)


def frobenius_norm(a: np.ndarray) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(a))


def add_scaled(acc: np.ndarray, delta: np.ndarray, alpha: float) -> np.ndarray:
    """acc + alpha·delta, elementwise; neither input is mutated."""
    if acc.shape != delta.shape:
        raise ValueError(f"add_scaled shape mismatch: {acc.shape} vs {delta.shape}")
    return acc + alpha * delta
