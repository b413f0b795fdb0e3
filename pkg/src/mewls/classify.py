"""Inlier/outlier split from converged weights and entry-order outlier scores."""

from dataclasses import dataclass, replace
import logging
import math
from typing import Optional

import numpy as np

from .exceptions import InfeasibleTargetError, InvalidThresholdError
from .maxent import SolverConfig, fit_stage, ols_state
from .wls import as_points

__all__ = [
    "DEFAULT_TOL_CLASSIFY",
    "OutlierReport",
    "split_inliers_outliers",
    "score_outliers",
]

logger = logging.getLogger(__name__)

DEFAULT_TOL_CLASSIFY = 1e-4


@dataclass
class OutlierReport:
    """Partition of the data indices into inliers and outliers.

    Attributes
    ----------
    inliers, outliers : ndarray of int
        Sorted index sets. Together they cover ``range(len(weights))``.
    weights : ndarray
        Weights the split was computed from.
    scores : ndarray of int
        ``scores[k]`` is the rank of ``outliers[k]``; 1 is the first point
        flagged.
    threshold : float
        Absolute cut ``tol_classify * max(weights)``.
    tol_classify : float
    entry_factor : ndarray, optional
        Reduction factor of the stage at which each outlier was first
        flagged (only set by :func:`score_outliers`).
    complete : bool
        False when a scoring run stopped before the requested count.
    """

    inliers: np.ndarray
    outliers: np.ndarray
    weights: np.ndarray
    scores: np.ndarray
    threshold: float
    tol_classify: float
    entry_factor: Optional[np.ndarray] = None
    complete: bool = True

    @property
    def n_outliers(self):
        return int(self.outliers.size)

    def ranked(self):
        """Outlier indices ordered by score."""
        return self.outliers[np.argsort(self.scores, kind="stable")]

    @property
    def mask(self):
        """Boolean array, True at outliers."""
        out = np.zeros(self.weights.size, dtype=bool)
        out[self.outliers] = True
        return out


def _check_tol(tol_classify):
    tol = float(tol_classify)
    if not 0.0 < tol < 1.0:
        raise InvalidThresholdError(
            f"tol_classify must lie in (0, 1), got {tol_classify!r}; "
            "at 1 or above every point but the heaviest would be an outlier"
        )
    return tol


def _rank_by_weight(idx, w):
    # Ascending weight, then ascending index.
    return idx[np.lexsort((idx, w[idx]))]


def split_inliers_outliers(w, tol_classify=DEFAULT_TOL_CLASSIFY):
    """Flag points whose weight is below ``tol_classify * max(w)``.

    Parameters
    ----------
    w : array-like, shape (m,)
    tol_classify : float
        Relative threshold in (0, 1).

    Returns
    -------
    OutlierReport
        Outliers are scored by ascending weight, ties by index.
    """
    tol = _check_tol(tol_classify)
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a nonempty array of finite nonnegative values")
    cut = tol * float(w.max())
    flagged = w < cut
    outliers = np.flatnonzero(flagged)
    order = _rank_by_weight(outliers, w)
    scores = np.empty(outliers.size, dtype=int)
    scores[np.searchsorted(outliers, order)] = np.arange(1, outliers.size + 1)
    return OutlierReport(
        inliers=np.flatnonzero(~flagged),
        outliers=outliers,
        weights=w,
        scores=scores,
        threshold=cut,
        tol_classify=tol,
    )


def score_outliers(
    A,
    y,
    n_outliers,
    cfg=None,
    r_final=500.0,
    n_stages=50,
    tol_classify=DEFAULT_TOL_CLASSIFY,
    max_doublings=30,
):
    """Rank points by the order in which they fall below the weight threshold.

    The error target is tightened along the geometric schedule
    ``r_j = r_final**(j / n_stages)``, warm-starting every stage. After
    each stage the newly flagged points get the next scores, ordered by
    ascending weight and then index. Flags latch: a point keeps its score
    even if its weight recovers later. If the schedule ends with fewer
    than ``n_outliers`` flagged points it is extended beyond ``r_final``,
    doubling the reduction factor with the same number of stages per
    doubling, until enough points are flagged, the target becomes
    unattainable, or ``max_doublings`` extensions have been made.

    Parameters
    ----------
    A : ndarray, shape (m, n)
    y : ndarray, shape (m,) or (m, s)
    n_outliers : int
        Number of points to rank, ``0 <= n_outliers < m``.
    cfg : SolverConfig, optional
    r_final : float
        End of the initial schedule, ``> 1``.
    n_stages : int
    tol_classify : float
    max_doublings : int

    Returns
    -------
    report : OutlierReport
        Every point flagged so far, with entry-order scores. More than
        ``n_outliers`` points are reported when several cross at the last
        stage. ``complete`` is False if fewer were found.
    state : FitState
        State at the last completed stage.
    """
    tol = _check_tol(tol_classify)
    cfg = cfg or SolverConfig()
    A = np.asarray(A, dtype=float)
    Y = as_points(y, A.shape[0])
    m = A.shape[0]
    n_outliers = int(n_outliers)
    if not 0 <= n_outliers < m:
        raise ValueError(f"n_outliers must satisfy 0 <= n_outliers < {m}, got {n_outliers}")
    if not r_final > 1 or int(n_stages) < 1:
        raise ValueError("need r_final > 1 and n_stages >= 1")

    state = ols_state(A, Y)
    mse_uw = state.mse_target
    order = []
    entry = []

    def flag(w, r):
        cut = tol * w.max()
        seen = set(order)
        new = np.array([i for i in np.flatnonzero(w < cut) if i not in seen], dtype=int)
        for i in _rank_by_weight(new, w):
            order.append(int(i))
            entry.append(float(r))

    factors = r_final ** (np.arange(1, int(n_stages) + 1) / int(n_stages))
    per_doubling = max(1, int(math.ceil(int(n_stages) * math.log(2.0) / math.log(r_final))))
    complete = True
    r_top = float(r_final)
    doublings = 0
    j = 0
    while n_outliers > 0 and len(order) < n_outliers:
        if j == len(factors):
            if doublings == max_doublings:
                complete = False
                break
            doublings += 1
            factors = np.concatenate(
                [factors, r_top * 2.0 ** (np.arange(1, per_doubling + 1) / per_doubling)]
            )
            r_top *= 2.0
        r = float(factors[j])
        j += 1
        try:
            new = fit_stage(A, Y, mse_uw / r, state, cfg)
        except InfeasibleTargetError as exc:
            exc.stage = j
            logger.info("scoring stopped at r=%.6g: %s", r, exc)
            complete = False
            break
        state = replace(new, reduction_factor=r, stage=j)
        flag(state.weights, r)

    outliers = np.array(sorted(order), dtype=int)
    pos = {i: k for k, i in enumerate(order)}
    scores = np.array([pos[i] + 1 for i in outliers], dtype=int)
    entry_factor = np.array([entry[pos[i]] for i in outliers], dtype=float)
    w = np.asarray(state.weights, dtype=float)
    inl = np.setdiff1d(np.arange(m), outliers)
    report = OutlierReport(
        inliers=inl,
        outliers=outliers,
        weights=w,
        scores=scores,
        threshold=tol * float(w.max()),
        tol_classify=tol,
        entry_factor=entry_factor,
        complete=complete,
    )
    return report, state
