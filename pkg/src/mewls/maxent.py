"""Maximum-entropy weighted least squares.

For a prescribed weighted mean squared error ``E``, the weights on the
probability simplex that maximize Shannon entropy have the softmin form
``w_i ∝ exp(-lam * r2_i)``, where ``r2_i`` is the squared residual of point
``i`` and ``lam`` is the Lagrange multiplier of the error constraint. The
control points, the multiplier and the weights are found by alternating:

1. weighted least squares for the control points with the current weights,
2. a scalar root solve for ``lam`` so that the softmin-weighted mean of
   ``r2`` equals ``E``,
3. the explicit weight update.

A continuation driver tightens ``E`` from the ordinary least-squares error
``E_uw`` down to ``E_uw / r_final`` over a schedule of reduction factors,
warm-starting every stage from the previous one.
"""

from dataclasses import dataclass, field, replace
import logging
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import (
    InfeasibleTargetError,
    NonConvergenceError,
    SolverFailureError,
)
from .wls import as_points, solve_weighted_ls

__all__ = [
    "SolverConfig",
    "FitState",
    "FitResult",
    "ContinuationSchedule",
    "squared_residuals",
    "solve_lambda2",
    "update_weights",
    "entropy",
    "fit_stage",
    "fit_mewls",
    "ols_state",
    "reduced_system_residuals",
]

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Tolerances and iteration caps of the alternating solver.

    Attributes
    ----------
    tol : float
        Stopping tolerance on successive control points, weights and
        multiplier (the multiplier test is relative once ``|lam| > 1``).
    tol_constraint : float
        Relative tolerance on the error constraint at convergence.
    max_outer_iters : int
        Cap on alternating iterations per stage.
    max_newton_iters : int
        Cap on safeguarded Newton steps for the multiplier before switching
        to plain bisection.
    lambda_rtol : float
        Tolerance of the multiplier equation, relative to the target error.
    schedule : "geometric" or sequence of float
        Continuation policy. ``"geometric"`` uses ``r_j = r_final**(j/N)``;
        an explicit increasing sequence of reduction factors is used as is.
    acceleration : "newton" or None
        Also try Newton steps on the reduced system (None gives the plain
        alternating sweeps only).
    """

    tol: float = 1e-8
    tol_constraint: float = 1e-6
    max_outer_iters: int = 200
    max_newton_iters: int = 50
    lambda_rtol: float = 1e-12
    schedule: Union[str, Sequence[float]] = "geometric"
    acceleration: Optional[str] = "newton"

    def __post_init__(self):
        for name in ("tol", "tol_constraint", "lambda_rtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_outer_iters", "max_newton_iters"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be at least 1")
        if isinstance(self.schedule, str) and self.schedule != "geometric":
            raise ValueError(f"unknown schedule policy {self.schedule!r}")
        if self.acceleration not in (None, "newton"):
            raise ValueError(f"unknown acceleration {self.acceleration!r}")

    def to_dict(self):
        sched = self.schedule if isinstance(self.schedule, str) else [float(r) for r in self.schedule]
        return {
            "tol": self.tol,
            "tol_constraint": self.tol_constraint,
            "max_outer_iters": int(self.max_outer_iters),
            "max_newton_iters": int(self.max_newton_iters),
            "lambda_rtol": self.lambda_rtol,
            "schedule": sched,
            "acceleration": self.acceleration,
        }


@dataclass
class FitState:
    """Control points, weights and multiplier at one point of the homotopy."""

    coef: np.ndarray
    weights: np.ndarray
    lambda2: float
    mse_target: float
    entropy: float
    mse: float
    reduction_factor: float = 1.0
    n_iter: int = 0
    stage: int = 0


@dataclass
class FitResult:
    """Output of :func:`fit_mewls`.

    ``trace[0]`` is the ordinary least-squares state; ``trace[-1]`` is
    ``state``. ``complete`` is False when the driver stopped early on an
    unattainable error target.
    """

    state: FitState
    trace: list
    mse_uw: float
    factors: np.ndarray
    complete: bool = True
    message: str = ""

    def __iter__(self):
        yield self.state
        yield self.trace


@dataclass(frozen=True)
class ContinuationSchedule:
    """Increasing reduction factors ``1 = r_0 < r_1 < ... < r_N``.

    A schedule ending at ``r = 1`` is the single least-squares stage.
    """

    factors: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=float).ravel()
        if f.size == 0 or f[0] != 1.0:
            raise ValueError("a continuation schedule starts at r_0 = 1")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise ValueError("reduction factors must be strictly increasing")
        object.__setattr__(self, "factors", f)

    @classmethod
    def geometric(cls, r_final, n_stages):
        if not r_final >= 1:
            raise ValueError(f"reduction factor must be >= 1, got {r_final}")
        if int(n_stages) < 1:
            raise ValueError(f"need at least one stage, got {n_stages}")
        n_stages = int(n_stages)
        if float(r_final) == 1.0:
            return cls(np.ones(1))
        factors = float(r_final) ** (np.arange(n_stages + 1) / n_stages)
        factors[0] = 1.0
        factors[-1] = float(r_final)
        return cls(factors)

    @classmethod
    def explicit(cls, factors):
        f = [float(r) for r in factors]
        if not f or f[0] != 1.0:
            f = [1.0] + f
        return cls(np.array(f))

    @classmethod
    def from_config(cls, cfg, r_final, n_stages):
        if isinstance(cfg.schedule, str):
            return cls.geometric(r_final, n_stages)
        return cls.explicit(cfg.schedule)

    @property
    def targets_over_uw(self):
        """``MSE_j / MSE_uw = 1 / r_j``."""
        return 1.0 / self.factors


def squared_residuals(A, coef, y):
    """Squared Euclidean residual ``||f(t_i) - y_i||^2`` of every data point."""
    Y = as_points(y, np.shape(A)[0])
    resid = np.asarray(A) @ np.asarray(coef, dtype=float).reshape(np.shape(A)[1], -1) - Y
    return np.einsum("ij,ij->i", resid, resid)


def update_weights(r2, lambda2):
    """Softmin weights ``exp(-lambda2 * r2) / Q`` with the exponent shifted by its maximum."""
    z = -float(lambda2) * np.asarray(r2, dtype=float)
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def entropy(w):
    """Shannon entropy ``-sum w log w`` with ``0 log 0 = 0``."""
    w = np.asarray(w, dtype=float)
    pos = w[w > 0]
    return float(-np.sum(pos * np.log(pos)))


def _gap(r2, lam, target):
    # Softmin-weighted mean of r2 minus the target, and the weighted variance
    # (= minus the derivative of the gap with respect to lam).
    w = update_weights(r2, lam)
    mean = w @ r2
    dev = r2 - mean
    return mean - target, w @ (dev * dev)


def solve_lambda2(r2, mse_target, lambda2_init=0.0, max_iters=50, tol=1e-12):
    """Multiplier that makes the softmin-weighted mean squared residual hit the target.

    Solves ``sum r2_i e^{-lam r2_i} - target * sum e^{-lam r2_i} = 0``, divided
    through by ``sum e^{-lam r2_i}`` so the residual is the weighted mean
    minus the target. The division keeps the equation well scaled at large
    ``lam`` and does not move the root. Safeguarded Newton steps are taken
    inside a bracket; after ``max_iters`` Newton steps the remaining work is
    plain bisection.

    Parameters
    ----------
    r2 : ndarray, shape (m,)
        Squared residuals.
    mse_target : float
    lambda2_init : float
        Warm start; returned unchanged when it already solves the equation.
    max_iters : int
    tol : float
        Accept ``lam`` when ``|mean_w(r2) - target| <= tol * target``.

    Raises
    ------
    InfeasibleTargetError
        The target is not strictly between the smallest and largest squared
        residual, so no finite multiplier attains it.
    SolverFailureError
        No sign change could be bracketed.
    """
    r2 = np.asarray(r2, dtype=float).ravel()
    target = float(mse_target)
    lam = float(lambda2_init)
    if not np.isfinite(lam):
        raise ValueError("lambda2_init must be finite")
    if not target > 0:
        raise InfeasibleTargetError(f"target error must be positive, got {target}", mse_target=target)
    atol = tol * target
    lo_r, hi_r = float(r2.min()), float(r2.max())

    h, var = _gap(r2, lam, target)
    if abs(h) <= atol:
        return lam
    if not lo_r < target < hi_r:
        raise InfeasibleTargetError(
            f"target error {target:.6g} outside the attainable open interval "
            f"({lo_r:.6g}, {hi_r:.6g}) of weighted mean squared residuals",
            mse_target=target,
            bounds=(lo_r, hi_r),
        )

    # h is strictly decreasing in lam; grow a bracket [lo, hi] with h(lo) > 0 > h(hi).
    step = max(abs(lam), 1.0 / (hi_r - lo_r))
    direction = 1.0 if h > 0 else -1.0
    other = lam
    h_other = h
    for _ in range(2100):
        other = lam + direction * step
        h_other, _ = _gap(r2, other, target)
        if not np.isfinite(h_other):
            raise SolverFailureError("non-finite residual while bracketing the multiplier")
        if abs(h_other) <= atol:
            return other
        if np.sign(h_other) != np.sign(h):
            break
        step *= 2.0
    else:
        raise SolverFailureError("could not bracket the multiplier root")
    if direction > 0:
        lo, hi = lam, other
    else:
        lo, hi = other, lam

    best, best_h = (lam, h) if abs(h) < abs(h_other) else (other, h_other)
    newton_steps = 0
    for _ in range(max_iters + 4000):
        if newton_steps < max_iters and var > 0:
            newton_steps += 1
            with np.errstate(over="ignore"):
                cand = lam + h / var
            if not lo < cand < hi:
                cand = 0.5 * (lo + hi)
        else:
            cand = 0.5 * (lo + hi)
        if cand == lam or not lo <= cand <= hi:
            break
        lam = cand
        h, var = _gap(r2, lam, target)
        if abs(h) < abs(best_h):
            best, best_h = lam, h
        if abs(h) <= atol:
            return lam
        if h > 0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi)):
            break
    logger.debug("multiplier bracket collapsed at |gap| = %.3g (target %.3g)", abs(best_h), target)
    return best


def _state(coef, w, lam, target, r2, **kw):
    return FitState(
        coef=coef,
        weights=w,
        lambda2=float(lam),
        mse_target=float(target),
        entropy=entropy(w),
        mse=float(w @ r2),
        **kw,
    )


def ols_state(A, y):
    """Uniform-weight least-squares fit: the starting point of the homotopy."""
    A = np.asarray(A, dtype=float)
    Y = as_points(y, A.shape[0])
    m = A.shape[0]
    w = np.full(m, 1.0 / m)
    coef = solve_weighted_ls(A, w, Y)
    r2 = squared_residuals(A, coef, Y)
    mse_uw = float(np.mean(r2))
    return _state(coef, w, 0.0, mse_uw, r2, reduction_factor=1.0, n_iter=1, stage=0)


def _reduced_jacobian(A, Y, coef, lam):
    # Jacobian of the reduced system in (coef, lam) with the weights
    # eliminated through w = softmin(r2(coef), lam):
    #   F1 = A^T W (A c - Y),   F2 = w . r2 - target.
    # Coefficients are flattened row-major, so column j*s + k is coef[j, k].
    m, n = A.shape
    s = Y.shape[1]
    resid = A @ coef - Y
    r2 = np.einsum("ij,ij->i", resid, resid)
    w = update_weights(r2, lam)
    G = (A[:, :, None] * resid[:, None, :]).reshape(m, n * s)  # d r2_i / d c = 2 G_i
    mean_r2 = w @ r2
    dw_dc = -2.0 * lam * w[:, None] * (G - w @ G)
    dw_dlam = -w * (r2 - mean_r2)

    J = np.empty((n * s + 1, n * s + 1))
    J[:-1, :-1] = np.kron((A.T * w) @ A, np.eye(s)) + G.T @ dw_dc
    J[:-1, -1] = G.T @ dw_dlam
    J[-1, :-1] = r2 @ dw_dc + 2.0 * (w @ G)
    J[-1, -1] = r2 @ dw_dlam
    return J, ((A.T * w) @ resid).ravel()


def _newton_direction(A, Y, coef, lam):
    # Newton step on the reduced system from a point where the error
    # constraint already holds, so only F1 is nonzero.
    n, s = coef.shape
    J, F1 = _reduced_jacobian(A, Y, coef, lam)
    try:
        step = np.linalg.solve(J, -np.concatenate([F1, [0.0]]))
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(step)):
        return None
    return step[:-1].reshape(n, s)


def fit_stage(A, y, mse_target, state_in, cfg=None):
    """Run the alternating iteration to a fixed point for one error target.

    Starts from the weights, control points and multiplier of ``state_in``.
    Each sweep solves the weighted least-squares problem with the current
    weights, re-solves the multiplier for the new residuals and rebuilds the
    weights. For a positive multiplier a sweep never lowers the entropy of
    the weights. With ``cfg.acceleration == "newton"`` a Newton step on the
    reduced system is also tried from the current iterate and replaces the
    sweep whenever it reaches at least the same entropy, which turns the
    slow linear tail of the sweeps into quadratic convergence without
    changing the fixed points.

    Stops when control points, weights and multiplier all change by less
    than ``cfg.tol`` between consecutive iterations.

    Raises
    ------
    InfeasibleTargetError
        The multiplier equation has no solution for the current residuals.
    NonConvergenceError
        ``cfg.max_outer_iters`` was reached; the last iterate is attached.
    """
    cfg = cfg or SolverConfig()
    A = np.asarray(A, dtype=float)
    Y = as_points(y, A.shape[0])
    shape = (A.shape[1], Y.shape[1])
    coef_prev = np.asarray(state_in.coef, dtype=float).reshape(shape)
    w = np.asarray(state_in.weights, dtype=float)
    lam = float(state_in.lambda2)
    newton = cfg.acceleration == "newton"

    def lam_for(c, lam0):
        r2 = squared_residuals(A, c, Y)
        return r2, solve_lambda2(r2, mse_target, lam0, cfg.max_newton_iters, cfg.lambda_rtol)

    coef = solve_weighted_ls(A, w, Y)
    r2, lam_new = lam_for(coef, lam)
    for k in range(1, int(cfg.max_outer_iters) + 1):
        w_new = update_weights(r2, lam_new)
        done = (
            np.max(np.abs(coef - coef_prev)) < cfg.tol
            and abs(lam_new - lam) < cfg.tol * max(1.0, abs(lam_new))
            and np.max(np.abs(w_new - w)) < cfg.tol
        )
        coef_prev, w, lam = coef, w_new, lam_new
        if done:
            break
        coef = solve_weighted_ls(A, w, Y)
        r2, lam_new = lam_for(coef, lam)
        if newton and lam > 0:
            step = _newton_direction(A, Y, coef_prev, lam)
            if step is not None:
                cand = coef_prev + step
                try:
                    r2_c, lam_c = lam_for(cand, lam)
                except (InfeasibleTargetError, SolverFailureError):
                    pass
                else:
                    h_sweep = entropy(update_weights(r2, lam_new))
                    h_cand = entropy(update_weights(r2_c, lam_c))
                    if h_cand >= h_sweep - 1e-13 * max(1.0, abs(h_sweep)):
                        coef, r2, lam_new = cand, r2_c, lam_c
    else:
        last = _state(coef_prev, w, lam, mse_target, r2, n_iter=k)
        raise NonConvergenceError(
            f"no fixed point after {k} iterations for target {mse_target:.6g}", state=last
        )
    state = _state(coef_prev, w, lam, mse_target, squared_residuals(A, coef_prev, Y), n_iter=k)
    gap = abs(state.mse - mse_target)
    if gap > cfg.tol_constraint * mse_target:
        logger.warning("constraint residual %.3g exceeds tolerance at target %.3g", gap, mse_target)
    return state


def fit_mewls(A, y, r_final, n_stages=1, cfg=None):
    """Continuation from ordinary least squares to the target ``E_uw / r_final``.

    Parameters
    ----------
    A : ndarray, shape (m, n)
        Design matrix.
    y : ndarray, shape (m,) or (m, s)
    r_final : float
        Final reduction factor, ``>= 1``.
    n_stages : int
        Number of stages after the least-squares stage (geometric policy).
    cfg : SolverConfig, optional

    Returns
    -------
    FitResult
        Unpacks as ``(state, trace)``.
    """
    cfg = cfg or SolverConfig()
    A = np.asarray(A, dtype=float)
    Y = as_points(y, A.shape[0])
    schedule = ContinuationSchedule.from_config(cfg, r_final, n_stages)

    state = ols_state(A, Y)
    mse_uw = state.mse_target
    trace = [state]
    complete = True
    message = ""
    for j, r in enumerate(schedule.factors[1:], start=1):
        target = mse_uw / r
        try:
            new = fit_stage(A, Y, target, state, cfg)
        except InfeasibleTargetError as exc:
            exc.stage = j
            complete = False
            message = f"stage {j} (r={r:.6g}): {exc}"
            logger.info("stopping continuation early: %s", message)
            break
        except NonConvergenceError as exc:
            exc.stage = j
            if exc.state is not None:
                exc.state.reduction_factor = float(r)
                exc.state.stage = j
            raise
        state = replace(new, reduction_factor=float(r), stage=j)
        trace.append(state)
    return FitResult(
        state=state,
        trace=trace,
        mse_uw=mse_uw,
        factors=schedule.factors,
        complete=complete,
        message=message,
    )


def reduced_system_residuals(A, y, state):
    """Residuals of the three fixed-point conditions at ``state``.

    Returns a dict with

    ``normal``
        ``||A^T W (A c - y)|| / ||A^T W y||``, worst over data components.
    ``constraint``
        ``|mean_w(r2) - target| / target`` with ``w`` rebuilt from ``c`` and
        ``lam``.
    ``weights``
        ``max |w - softmin(r2(c), lam)|``.
    """
    A = np.asarray(A, dtype=float)
    Y = as_points(y, A.shape[0])
    coef = np.asarray(state.coef).reshape(A.shape[1], Y.shape[1])
    w = np.asarray(state.weights)
    resid = A @ coef - Y
    grad = (A.T * w) @ resid
    scale = np.linalg.norm((A.T * w) @ Y, axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    r2 = np.einsum("ij,ij->i", resid, resid)
    w_model = update_weights(r2, state.lambda2)
    return {
        "normal": float(np.max(np.linalg.norm(grad, axis=0) / scale)),
        "constraint": float(abs(w_model @ r2 - state.mse_target) / state.mse_target),
        "weights": float(np.max(np.abs(w - w_model))),
    }

