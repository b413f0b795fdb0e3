"""Loading, normalizing and denormalizing time series."""

import csv
from dataclasses import dataclass, field
import logging
import operator
from typing import Optional, Sequence

import numpy as np

from .exceptions import DegenerateParameterError, EmptyInputError, ParseError

__all__ = [
    "RawSeries",
    "AffineTransform",
    "Dataset",
    "normalize",
    "denormalize_curve",
    "load_csv",
    "DEFAULT_MISSING",
]

logger = logging.getLogger(__name__)

DEFAULT_MISSING = ("NA", "")


@dataclass
class RawSeries:
    """Parameters ``t`` and points ``y`` in original units.

    ``mask`` marks usable rows; rows with ``mask == False`` had missing
    values and are ignored by :func:`normalize`.
    """

    t: np.ndarray
    y: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        self.y = y
        if self.y.shape[0] != self.t.size:
            raise ValueError(f"{self.t.size} parameters but {self.y.shape[0]} points")
        if self.mask is None:
            self.mask = np.ones(self.t.size, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool).ravel()

    @property
    def n_points(self):
        return int(self.t.size)

    @property
    def n_effective(self):
        return int(np.count_nonzero(self.mask))

    @property
    def dim(self):
        return int(self.y.shape[1])


@dataclass(frozen=True)
class AffineTransform:
    """Per-axis ``(min, range)`` maps to [0, 1].

    A constant component has ``y_range == 0`` and is mapped to 0.5.
    """

    t_min: float
    t_range: float
    y_min: np.ndarray
    y_range: np.ndarray

    @classmethod
    def identity(cls, dim):
        return cls(0.0, 1.0, np.zeros(dim), np.ones(dim))

    @property
    def constant_components(self):
        return np.flatnonzero(self.y_range == 0)

    def forward_t(self, t):
        return (np.asarray(t, dtype=float) - self.t_min) / self.t_range

    def inverse_t(self, x):
        return self.t_min + np.asarray(x, dtype=float) * self.t_range

    def forward_y(self, y):
        y = np.asarray(y, dtype=float)
        flat = self.y_range == 0
        scale = np.where(flat, 1.0, self.y_range)
        out = (y - self.y_min) / scale
        return np.where(flat, 0.5, out)

    def inverse_y(self, z):
        z = np.asarray(z, dtype=float)
        return self.y_min + z * self.y_range

    def to_dict(self):
        return {
            "t_min": float(self.t_min),
            "t_range": float(self.t_range),
            "y_min": [float(v) for v in self.y_min],
            "y_range": [float(v) for v in self.y_range],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            float(d["t_min"]),
            float(d["t_range"]),
            np.asarray(d["y_min"], dtype=float),
            np.asarray(d["y_range"], dtype=float),
        )


@dataclass
class Dataset:
    """Normalized data in ``[0, 1] x [0, 1]^s`` plus the map back.

    ``index`` holds the row numbers of the source :class:`RawSeries` that
    survived masking.
    """

    t: np.ndarray
    y: np.ndarray
    transform: AffineTransform
    index: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.index is None:
            self.index = np.arange(self.t.size)

    @property
    def n_points(self):
        return int(self.t.size)


def normalize(raw):
    """Map parameters and each data component affinely onto [0, 1].

    Masked rows are dropped first. A constant data component is mapped to
    0.5 and logged as a warning.

    Raises
    ------
    DegenerateParameterError
        Fewer than two distinct parameter values remain.
    """
    keep = np.flatnonzero(raw.mask)
    if keep.size == 0:
        raise EmptyInputError("no unmasked rows to normalize")
    t = raw.t[keep]
    y = raw.y[keep]
    t_min, t_max = float(t.min()), float(t.max())
    if not t_max > t_min:
        raise DegenerateParameterError("parameter column is constant; need two distinct values")
    y_min = y.min(axis=0)
    y_range = y.max(axis=0) - y_min
    tf = AffineTransform(t_min, t_max - t_min, y_min, y_range)
    for j in tf.constant_components:
        logger.warning("data component %d is constant; mapped to 0.5", j)
    tn = np.clip(tf.forward_t(t), 0.0, 1.0)
    yn = np.clip(tf.forward_y(y), 0.0, 1.0)
    return Dataset(tn, yn, tf, keep)


def denormalize_curve(ds, x, points):
    """Map normalized parameters and points back to original units.

    Parameters
    ----------
    ds : Dataset or AffineTransform
    x : array-like, shape (k,)
    points : array-like, shape (k,) or (k, s)

    Returns
    -------
    t_raw : ndarray, shape (k,)
    y_raw : ndarray, shape (k, s)
    """
    tf = ds.transform if isinstance(ds, Dataset) else ds
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return tf.inverse_t(x), tf.inverse_y(pts)


_FILTER_OPS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}


def _resolve(selector, header, n_cols):
    if isinstance(selector, (int, np.integer)):
        idx = int(selector)
    elif isinstance(selector, str) and selector.lstrip("-").isdigit() and (
        header is None or selector not in header
    ):
        idx = int(selector)
    else:
        if header is None or selector not in header:
            raise EmptyInputError(f"column {selector!r} not found")
        return header.index(selector)
    if not -n_cols <= idx < n_cols:
        raise EmptyInputError(f"column index {idx} out of range for {n_cols} columns")
    return idx % n_cols


def _cell(text, row, col, missing):
    s = text.strip()
    if s in missing:
        return None
    try:
        return float(s)
    except ValueError:
        raise ParseError(
            f"row {row}, column {col}: cannot parse {text!r} as a number", row=row, column=col
        ) from None


def load_csv(
    path,
    t_col: Optional[object] = 0,
    y_cols: Optional[Sequence[object]] = None,
    delimiter=",",
    header=False,
    missing=DEFAULT_MISSING,
    row_filter=None,
):
    """Read a time series from a delimited text file.

    Parameters
    ----------
    path : str or path-like
    t_col : int, str or None
        Column holding the parameter. ``None`` uses the row number.
    y_cols : sequence of int or str, optional
        Data columns; default is every column except ``t_col``.
    delimiter : str
    header : bool
        Whether the first row holds column names.
    missing : iterable of str
        Cell values treated as missing. Rows with a missing selected cell
        are kept but masked.
    row_filter : tuple (column, op, value), optional
        Keep only rows where ``row[column] op value``; ``op`` is one of
        ``< <= > >= == !=``. Rows failing the filter are discarded.

    Returns
    -------
    RawSeries
        Rows sorted by parameter with a stable sort. Row and column numbers
        in error messages are 1-based and count the header line.
    """
    missing = set(missing)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter)]
    line_no = list(range(1, len(rows) + 1))
    names = None
    if header and rows:
        names = [c.strip() for c in rows[0]]
        rows, line_no = rows[1:], line_no[1:]
    pairs = [(r, n) for r, n in zip(rows, line_no) if any(c.strip() for c in r)]
    if not pairs:
        raise EmptyInputError(f"{path}: no data rows")
    n_cols = len(names) if names is not None else max(len(r) for r, _ in pairs)

    t_idx = None if t_col is None else _resolve(t_col, names, n_cols)
    if y_cols is None:
        y_idx = [j for j in range(n_cols) if j != t_idx]
    else:
        y_idx = [_resolve(c, names, n_cols) for c in y_cols]
    if not y_idx:
        raise EmptyInputError("no data columns selected")

    filt = None
    if row_filter is not None:
        f_col, f_op, f_val = row_filter
        if f_op not in _FILTER_OPS:
            raise ValueError(f"unknown filter operator {f_op!r}")
        filt = (_resolve(f_col, names, n_cols), _FILTER_OPS[f_op], float(f_val))

    t_vals, y_vals, mask = [], [], []
    for pos, (r, line) in enumerate(pairs):
        def get(j):
            if j >= len(r):
                raise ParseError(f"row {line}, column {j + 1}: missing cell", row=line, column=j + 1)
            return _cell(r[j], line, j + 1, missing)

        if filt is not None:
            v = get(filt[0])
            if v is None or not filt[1](v, filt[2]):
                continue
        tv = float(pos) if t_idx is None else get(t_idx)
        yv = [get(j) for j in y_idx]
        ok = tv is not None and all(v is not None for v in yv)
        t_vals.append(np.nan if tv is None else tv)
        y_vals.append([np.nan if v is None else v for v in yv])
        mask.append(ok)

    if not t_vals:
        raise EmptyInputError(f"{path}: no rows left after filtering")
    t = np.array(t_vals, dtype=float)
    y = np.array(y_vals, dtype=float)
    mask = np.array(mask, dtype=bool)
    bad = mask & ~(np.isfinite(t) & np.all(np.isfinite(y), axis=1))
    if np.any(bad):
        raise ParseError(f"non-finite value in data row {int(np.flatnonzero(bad)[0]) + 1}")
    # Masked rows with unknown t go last; ties keep input order.
    order = np.argsort(np.where(np.isnan(t), np.inf, t), kind="stable")
    return RawSeries(t[order], y[order], mask[order])
