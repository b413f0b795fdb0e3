"""B-spline bases on clamped knot vectors over [0, 1].

Basis functions are evaluated with the Cox-de Boor recursion. Terms whose
denominator vanishes (repeated knots) are dropped. The basis is
right-continuous on [0, 1) and the last nonempty knot span is closed, so
``x = 1`` evaluates to the last basis function.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, DomainError, InvalidBasisError

__all__ = [
    "KnotVector",
    "make_uniform_knots",
    "eval_basis",
    "design_matrix",
    "eval_spline",
]


@dataclass(frozen=True, eq=False)
class KnotVector:
    """A (d+1)-regular knot vector on [0, 1].

    Parameters
    ----------
    degree : int
        Polynomial degree ``d`` of the splines.
    knots : array-like, shape (n + d + 1,)
        Nondecreasing knots; the first and last ``d + 1`` entries must be
        0 and 1 respectively and interior knots must lie in (0, 1).
    """

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        d = int(self.degree)
        if d < 0 or d != self.degree:
            raise InvalidBasisError(f"degree must be a nonnegative integer, got {self.degree!r}")
        knots = np.array(self.knots, dtype=float).ravel()
        if knots.size < 2 * (d + 1):
            raise InvalidBasisError(
                f"a degree-{d} knot vector needs at least {2 * (d + 1)} knots, got {knots.size}"
            )
        if not np.all(np.isfinite(knots)):
            raise InvalidBasisError("knots must be finite")
        if np.any(np.diff(knots) < 0):
            raise InvalidBasisError("knots must be nondecreasing")
        if np.any(knots[: d + 1] != 0.0) or np.any(knots[-(d + 1):] != 1.0):
            raise InvalidBasisError(
                f"the first and last {d + 1} knots must equal 0 and 1 respectively"
            )
        interior = knots[d + 1: knots.size - d - 1]
        if np.any(interior <= 0.0) or np.any(interior >= 1.0):
            raise InvalidBasisError("interior knots must lie strictly inside (0, 1)")
        n = knots.size - d - 1
        if np.any(knots[:n] >= knots[d + 1: d + 1 + n]):
            raise InvalidBasisError(
                f"knot multiplicity exceeds {d}: basis functions would not be independent"
            )
        knots.setflags(write=False)
        object.__setattr__(self, "degree", d)
        object.__setattr__(self, "knots", knots)

    @property
    def n_basis(self):
        """Number of basis functions ``n = len(knots) - d - 1``."""
        return self.knots.size - self.degree - 1

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))

    def __repr__(self):
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"


def make_uniform_knots(degree, n_basis):
    """Clamped knot vector with ``n_basis - degree - 1`` equally spaced interior knots.

    >>> make_uniform_knots(2, 4).knots.tolist()
    [0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]
    """
    degree = int(degree)
    n_basis = int(n_basis)
    if degree < 0:
        raise InvalidBasisError(f"degree must be nonnegative, got {degree}")
    if n_basis < degree + 1:
        raise InvalidBasisError(
            f"need at least degree + 1 = {degree + 1} basis functions, got {n_basis}"
        )
    n_spans = n_basis - degree
    interior = np.arange(1, n_spans) / n_spans
    knots = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    return KnotVector(degree, knots)


def _basis_table(kv, x):
    # Rows: points, columns: basis functions. Same path for one point or many.
    k = kv.knots
    d = kv.degree
    n_spans = k.size - 1
    xc = x[:, None]
    table = ((k[:-1] <= xc) & (xc < k[1:])).astype(float)
    last_span = np.flatnonzero(k[:-1] < k[1:])[-1]
    table[x == k[-1], last_span] = 1.0
    for p in range(1, d + 1):
        cols = n_spans - p
        left_den = k[p: p + cols] - k[:cols]
        right_den = k[p + 1: p + 1 + cols] - k[1: 1 + cols]
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(left_den > 0, (xc - k[:cols]) / left_den, 0.0)
            right = np.where(right_den > 0, (k[p + 1: p + 1 + cols] - xc) / right_den, 0.0)
        table = left * table[:, :cols] + right * table[:, 1: cols + 1]
    return table


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    bad = ~((x >= 0.0) & (x <= 1.0))
    if np.any(bad):
        raise DomainError(f"evaluation points must lie in [0, 1]; got {x[bad][:5].tolist()}")
    return x


def eval_basis(kv, x):
    """Values ``(B_1(x), ..., B_n(x))`` of all basis functions at a scalar ``x``."""
    x = _check_domain(np.atleast_1d(np.asarray(x, dtype=float)))
    if x.size != 1:
        raise DimensionError("eval_basis takes a scalar; use design_matrix for many points")
    return _basis_table(kv, x)[0]


def design_matrix(kv, t):
    """Collocation matrix ``A[i, j] = B_j(t_i)``.

    Parameters
    ----------
    kv : KnotVector
    t : array-like, shape (m,)
        Parameter values in [0, 1].

    Returns
    -------
    numpy.ndarray, shape (m, n)
    """
    t = _check_domain(np.asarray(t, dtype=float).ravel())
    return _basis_table(kv, t)


def eval_spline(kv, coef, x):
    """Evaluate ``sum_j coef[j] * B_j(x)``.

    ``coef`` has shape ``(n,)`` or ``(n, s)``; ``x`` may be a scalar or an
    array of parameters. Output shape follows ``x`` then the trailing
    shape of ``coef``.
    """
    coef = np.asarray(coef, dtype=float)
    if coef.ndim == 0 or coef.shape[0] != kv.n_basis:
        raise DimensionError(
            f"expected {kv.n_basis} control points, got array of shape {coef.shape}"
        )
    x_arr = np.asarray(x, dtype=float)
    values = design_matrix(kv, x_arr.ravel()) @ coef.reshape(kv.n_basis, -1)
    return values.reshape(x_arr.shape + coef.shape[1:])
