"""Weighted linear least squares for vector-valued data.

The weighted problem ``min_c sum_i w_i ||(A c)_i - y_i||^2`` decouples over
the ``s`` data components, so every component is solved against the same
scaled matrix ``sqrt(W) A``.
"""

import warnings

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, RankDeficiencyError

__all__ = [
    "RANK_RTOL",
    "RankDeficiencyWarning",
    "as_points",
    "solve_weighted_ls",
    "mse_of_fit",
    "normal_equations_solve",
]

#: Relative threshold on R's diagonal / singular values for numerical rank.
RANK_RTOL = 1e-12


class RankDeficiencyWarning(RuntimeWarning):
    """A minimum-norm solution was returned for a rank-deficient system."""


def as_points(y, m=None):
    """Return data as a float array of shape ``(m, s)``."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2:
        raise DimensionError(f"data must be 1-D or 2-D, got shape {y.shape}")
    if m is not None and y.shape[0] != m:
        raise DimensionError(f"expected {m} data rows, got {y.shape[0]}")
    return y


def _check(A, w, y):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"design matrix must be 2-D, got shape {A.shape}")
    m = A.shape[0]
    w = np.asarray(w, dtype=float).ravel()
    if w.size != m:
        raise DimensionError(f"expected {m} weights, got {w.size}")
    return A, w, as_points(y, m)


def solve_weighted_ls(A, w, y):
    """Minimize the weighted squared error over the control points.

    Uses a column-pivoted QR factorization of ``sqrt(W) A``. When the
    factorization reveals numerical rank below ``n`` the minimum-norm
    SVD solution is returned with a :class:`RankDeficiencyWarning`; if that
    solution does not satisfy the normal equations either, a
    :class:`RankDeficiencyError` carrying the rank is raised instead.

    Parameters
    ----------
    A : ndarray, shape (m, n)
    w : ndarray, shape (m,)
        Nonnegative weights.
    y : ndarray, shape (m,) or (m, s)

    Returns
    -------
    ndarray, shape (n, s)
    """
    A, w, Y = _check(A, w, y)
    m, n = A.shape
    if m < n:
        raise DimensionError(f"need at least as many data rows ({m}) as basis functions ({n})")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    sw = np.sqrt(w)
    SA = sw[:, None] * A
    SY = sw[:, None] * Y

    Q, R, perm = scipy.linalg.qr(SA, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > RANK_RTOL * diag[0])) if diag[0] > 0 else 0
    if rank == n:
        coef = np.empty((n, Y.shape[1]))
        coef[perm] = scipy.linalg.solve_triangular(R, Q.T @ SY)
        return coef

    coef, _, svd_rank, _ = scipy.linalg.lstsq(SA, SY, cond=RANK_RTOL, lapack_driver="gelsd")
    grad = SA.T @ (SA @ coef - SY)
    scale = np.linalg.norm(SA.T @ SY, axis=0)
    if np.all(np.linalg.norm(grad, axis=0) <= 1e-10 * np.maximum(scale, np.finfo(float).tiny)):
        warnings.warn(
            f"weighted design matrix has numerical rank {svd_rank} < {n}; "
            "returning the minimum-norm solution",
            RankDeficiencyWarning,
            stacklevel=2,
        )
        return coef
    raise RankDeficiencyError(
        f"weighted design matrix has numerical rank {svd_rank} < {n}",
        rank=int(svd_rank),
        n_columns=n,
    )


def mse_of_fit(A, w, coef, y):
    """Weighted mean squared error ``sum_i w_i ||f(t_i) - y_i||^2``."""
    A, w, Y = _check(A, w, y)
    coef = np.asarray(coef, dtype=float).reshape(A.shape[1], -1)
    resid = A @ coef - Y
    return float(w @ np.einsum("ij,ij->i", resid, resid))


def normal_equations_solve(A, w, y):
    """Solve ``(A^T W A) c = A^T W y`` by Cholesky.

    Kept as an independent reference for the QR path; it squares the
    condition number and is not used by the fitting routines.
    """
    A, w, Y = _check(A, w, y)
    AtW = A.T * w
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(AtW @ A), AtW @ Y)
