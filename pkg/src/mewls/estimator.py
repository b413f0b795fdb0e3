"""Scikit-learn style estimator wrapping the continuation solver."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bspline import KnotVector, design_matrix, make_uniform_knots
from .classify import DEFAULT_TOL_CLASSIFY, split_inliers_outliers
from .data import RawSeries, normalize
from .exceptions import DomainError
from .maxent import SolverConfig, fit_mewls

__all__ = ["MEWLSSpline"]


class MEWLSSpline(RegressorMixin, BaseEstimator):
    """B-spline curve fitted by maximum-entropy weighted least squares.

    Parameters and data are mapped affinely onto [0, 1] before fitting and
    predictions are mapped back, so inputs and outputs are in original
    units.

    Parameters
    ----------
    degree : int, default=3
    n_basis : int, default=10
        Number of basis functions on a uniform clamped knot vector. Ignored
        when ``knots`` is given.
    knots : array-like, optional
        Full clamped knot vector on [0, 1].
    r_final : float, default=100.0
        Final reduction of the least-squares error.
    n_stages : int, default=20
        Stages of the geometric continuation schedule.
    tol, tol_constraint, max_outer_iters, max_newton_iters, acceleration
        Passed to :class:`~mewls.maxent.SolverConfig`.
    tol_classify : float, default=1e-4
        Relative weight threshold used for ``outlier_mask_``.

    Attributes
    ----------
    knots_ : KnotVector
    coef_ : ndarray, shape (n_basis, n_outputs)
        Control points in normalized units.
    control_points_ : ndarray, shape (n_basis, n_outputs)
        Control points in original units.
    weights_ : ndarray, shape (n_samples,)
        Final weights, in input row order.
    lambda2_, entropy_ : float
    mse_uw_ : float
        Unweighted least-squares error in normalized units.
    trace_ : list of FitState
    outlier_mask_ : ndarray of bool
    transform_ : AffineTransform
    complete_ : bool
        False when the schedule stopped early on an unattainable target.
    """

    def __init__(
        self,
        degree=3,
        n_basis=10,
        knots=None,
        r_final=100.0,
        n_stages=20,
        tol=1e-8,
        tol_constraint=1e-6,
        max_outer_iters=200,
        max_newton_iters=50,
        acceleration="newton",
        tol_classify=DEFAULT_TOL_CLASSIFY,
    ):
        self.degree = degree
        self.n_basis = n_basis
        self.knots = knots
        self.r_final = r_final
        self.n_stages = n_stages
        self.tol = tol
        self.tol_constraint = tol_constraint
        self.max_outer_iters = max_outer_iters
        self.max_newton_iters = max_newton_iters
        self.acceleration = acceleration
        self.tol_classify = tol_classify

    def _knot_vector(self):
        if self.knots is not None:
            return KnotVector(self.degree, self.knots)
        return make_uniform_knots(self.degree, self.n_basis)

    def _solver_config(self):
        return SolverConfig(
            tol=self.tol,
            tol_constraint=self.tol_constraint,
            max_outer_iters=self.max_outer_iters,
            max_newton_iters=self.max_newton_iters,
            acceleration=self.acceleration,
        )

    @staticmethod
    def _as_parameter(X):
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError(f"X must hold a single parameter column, got {X.shape[1]}")
            X = X[:, 0]
        return X

    def fit(self, X, y):
        """Fit to parameters ``X`` (shape (m,) or (m, 1)) and data ``y``.

        Rows are processed in ascending parameter order (stable); fitted
        per-row attributes are returned in the input order.
        """
        t = self._as_parameter(X)
        Y = check_array(y, ensure_2d=False, dtype=float)
        if Y.shape[0] != t.size:
            raise ValueError(f"X has {t.size} rows but y has {Y.shape[0]}")
        if not float(self.r_final) >= 1.0:
            raise ValueError("r_final must be at least 1")
        kv = self._knot_vector()
        cfg = self._solver_config()

        order = np.argsort(t, kind="stable")
        ds = normalize(RawSeries(t[order], Y[order]))
        A = design_matrix(kv, ds.t)
        result = fit_mewls(A, ds.y, float(self.r_final), int(self.n_stages), cfg)
        state = result.state

        inverse = np.empty_like(order)
        inverse[order] = np.arange(order.size)
        self.knots_ = kv
        self.transform_ = ds.transform
        self.coef_ = np.asarray(state.coef)
        self.control_points_ = ds.transform.inverse_y(self.coef_)
        self.weights_ = np.asarray(state.weights)[inverse]
        self.lambda2_ = state.lambda2
        self.entropy_ = state.entropy
        self.mse_uw_ = result.mse_uw
        self.trace_ = result.trace
        self.complete_ = result.complete
        self.result_ = result
        self.outlier_mask_ = split_inliers_outliers(self.weights_, self.tol_classify).mask
        self.n_features_in_ = 1
        self.n_outputs_ = 1 if Y.ndim == 1 else Y.shape[1]
        return self

    def predict(self, X):
        """Evaluate the fitted curve at parameters ``X`` in original units.

        Raises
        ------
        DomainError
            A parameter lies outside the range seen during ``fit``.
        """
        check_is_fitted(self, "coef_")
        t = self._as_parameter(X)
        x = self.transform_.forward_t(t)
        # Absorb rounding from the affine round trip at the end points.
        slack = 8 * np.finfo(float).eps
        if np.any((x < -slack) | (x > 1 + slack)):
            raise DomainError("prediction parameters lie outside the fitted range")
        x = np.clip(x, 0.0, 1.0)
        values = self.transform_.inverse_y(design_matrix(self.knots_, x) @ self.coef_)
        return values[:, 0] if self.n_outputs_ == 1 else values
