"""Maximum-entropy weighted least-squares B-spline fitting.

Weights on the data are chosen to maximize Shannon entropy subject to a
prescribed weighted mean squared error. Tightening the error from the
ordinary least-squares value drives the weights of outlying points to
zero, so the same fit yields a robust curve and an outlier split.
"""

from .bspline import KnotVector, design_matrix, eval_basis, eval_spline, make_uniform_knots
from .classify import OutlierReport, score_outliers, split_inliers_outliers
from .data import (
    AffineTransform,
    Dataset,
    RawSeries,
    denormalize_curve,
    load_csv,
    normalize,
)
from .estimator import MEWLSSpline
from .exceptions import (
    DegenerateParameterError,
    DimensionError,
    DomainError,
    EmptyInputError,
    InfeasibleTargetError,
    InvalidBasisError,
    InvalidThresholdError,
    MEWLSError,
    NonConvergenceError,
    ParseError,
    RankDeficiencyError,
    SolverFailureError,
)
from .maxent import (
    ContinuationSchedule,
    FitResult,
    FitState,
    SolverConfig,
    entropy,
    fit_mewls,
    fit_stage,
    ols_state,
    reduced_system_residuals,
    solve_lambda2,
    squared_residuals,
    update_weights,
)
from .synth import NoiseSpec, gen_helix, gen_profile, gen_spiral, two_bump_profile
from .wls import RankDeficiencyWarning, mse_of_fit, solve_weighted_ls

__version__ = "0.1.0"

__all__ = [
    "KnotVector",
    "make_uniform_knots",
    "eval_basis",
    "design_matrix",
    "eval_spline",
    "solve_weighted_ls",
    "mse_of_fit",
    "RankDeficiencyWarning",
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
    "OutlierReport",
    "split_inliers_outliers",
    "score_outliers",
    "RawSeries",
    "AffineTransform",
    "Dataset",
    "normalize",
    "denormalize_curve",
    "load_csv",
    "NoiseSpec",
    "gen_profile",
    "gen_spiral",
    "gen_helix",
    "two_bump_profile",
    "MEWLSSpline",
    "MEWLSError",
    "InvalidBasisError",
    "DomainError",
    "DimensionError",
    "RankDeficiencyError",
    "InfeasibleTargetError",
    "SolverFailureError",
    "NonConvergenceError",
    "DegenerateParameterError",
    "ParseError",
    "EmptyInputError",
    "InvalidThresholdError",
]
