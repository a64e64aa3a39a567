"""Dense symmetric linear algebra helpers used by the clustering engines.

Everything here goes through factorizations (Cholesky or symmetric
eigendecomposition); explicit matrix inverses are never formed.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "SymmetryError",
    "NotPositiveDefiniteError",
    "sym_eigenvalues",
    "cholesky_lower",
    "spd_solve",
    "log_det",
    "regularize_spd",
]

# Relative tolerance for the symmetry check: |a_ij - a_ji| may not exceed
# 1e-12 * max(1, |a_ij|).
SYMMETRY_RTOL = 1e-12


class SymmetryError(ValueError):
    """Raised when a matrix that must be symmetric is not."""


class NotPositiveDefiniteError(ValueError):
    """Raised when a Cholesky factorization fails."""


def _check_symmetric(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SymmetryError(f"expected a square matrix, got shape {m.shape}")
    scale = np.maximum(1.0, np.abs(m))
    if not (np.abs(m - m.T) <= SYMMETRY_RTOL * scale).all():
        raise SymmetryError("matrix is not symmetric within tolerance")
    return m


def sym_eigenvalues(m) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, sorted in descending order.

    Parameters
    ----------
    m : (p, p) array_like, symmetric.

    Returns
    -------
    (p,) ndarray of eigenvalues, largest first.
    """
    m = _check_symmetric(m)
    return np.linalg.eigvalsh(m)[::-1]


def cholesky_lower(m) -> np.ndarray:
    """Lower Cholesky factor L with L @ L.T == m.

    Raises NotPositiveDefiniteError if the factorization fails.
    """
    m = _check_symmetric(m)
    try:
        return scipy.linalg.cholesky(m, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc


def spd_solve(m, b) -> np.ndarray:
    """Solve m @ x = b for symmetric positive definite m via Cholesky.

    b may be a vector or a matrix of stacked right-hand sides.
    """
    L = cholesky_lower(m)
    b = np.asarray(b, dtype=float)
    return scipy.linalg.cho_solve((L, True), b)


def log_det(m) -> float:
    """Log determinant of a symmetric positive definite matrix.

    Computed as 2 * sum(log(diag(L))) from the Cholesky factor, which stays
    finite where forming det(m) directly would underflow or overflow.
    """
    L = cholesky_lower(m)
    return float(2.0 * np.sum(np.log(np.diag(L))))


def regularize_spd(m, floor: float) -> np.ndarray:
    """Clamp the eigenvalues of a symmetric matrix at ``floor``.

    Eigenvectors are preserved. When every eigenvalue already sits at or
    above the floor the input is returned unchanged, so repeated
    application is idempotent.

    Parameters
    ----------
    m : (p, p) array_like, symmetric.
    floor : positive lower bound for the output eigenvalues.

    Returns
    -------
    (p, p) ndarray, symmetric positive definite.
    """
    if not floor > 0:
        raise ValueError(f"floor must be positive, got {floor!r}")
    m = _check_symmetric(m)
    eigvals, eigvecs = np.linalg.eigh(m)
    if eigvals[0] >= floor:
        return m
    clamped = np.maximum(eigvals, floor)
    out = (eigvecs * clamped) @ eigvecs.T
    # eigh reconstruction is symmetric only up to rounding; enforce it.
    return 0.5 * (out + out.T)


def chol_mahalanobis_sq(L, diffs) -> np.ndarray:
    """Squared Mahalanobis norms diag(diffs @ inv(L L.T) @ diffs.T).

    Parameters
    ----------
    L : (p, p) lower Cholesky factor of the covariance.
    diffs : (n, p) rows of differences from the center.

    Returns
    -------
    (n,) ndarray of squared distances.
    """
    diffs = np.atleast_2d(np.asarray(diffs, dtype=float))
    y = scipy.linalg.solve_triangular(L, diffs.T, lower=True)
    return np.einsum("ij,ij->j", y, y)


def chol_log_det(L) -> float:
    """Log determinant from a lower Cholesky factor."""
    return float(2.0 * np.sum(np.log(np.diag(L))))
