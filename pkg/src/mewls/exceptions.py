"""Exception hierarchy.

Every exception carries an ``error_class`` string that the command-line
front end reports verbatim, so scripts can branch on the failure kind.
"""


class MEWLSError(Exception):
    """Base class for all errors raised by this package."""

    error_class = "error"


class InvalidBasisError(MEWLSError, ValueError):
    """Knot vector or basis size is not admissible."""

    error_class = "invalid-basis"


class DomainError(MEWLSError, ValueError):
    """Evaluation point outside the parameter interval [0, 1]."""

    error_class = "domain"


class DimensionError(MEWLSError, ValueError):
    """Array shapes do not agree."""

    error_class = "invalid-argument"


class RankDeficiencyError(MEWLSError, ArithmeticError):
    """The weighted design matrix is numerically rank deficient."""

    error_class = "rank-deficiency"

    def __init__(self, message, rank=None, n_columns=None):
        super().__init__(message)
        self.rank = rank
        self.n_columns = n_columns


class InfeasibleTargetError(MEWLSError, ValueError):
    """The prescribed mean squared error cannot be attained by any weighting."""

    error_class = "infeasible-target"

    def __init__(self, message, mse_target=None, bounds=None, stage=None):
        super().__init__(message)
        self.mse_target = mse_target
        self.bounds = bounds
        self.stage = stage


class SolverFailureError(MEWLSError, ArithmeticError):
    """The scalar multiplier equation could not be solved."""

    error_class = "solver-failure"


class NonConvergenceError(MEWLSError, ArithmeticError):
    """The alternating iteration hit its iteration cap.

    The last iterate is attached as ``state``.
    """

    error_class = "non-convergence"

    def __init__(self, message, state=None, stage=None):
        super().__init__(message)
        self.state = state
        self.stage = stage


class DegenerateParameterError(MEWLSError, ValueError):
    """The parameter column is constant, so it cannot be normalized."""

    error_class = "degenerate-parameter"


class ParseError(MEWLSError, ValueError):
    """A CSV cell could not be parsed as a number."""

    error_class = "parse"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyInputError(MEWLSError, ValueError):
    """No usable rows or columns were selected."""

    error_class = "empty-input"


class InvalidThresholdError(MEWLSError, ValueError):
    """Classification threshold outside (0, 1)."""

    error_class = "invalid-threshold"
