"""CSV ingestion of returns, covariance and mean files, and sample moments.

Column order is player order everywhere.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from coalloc.variance import CovarianceMatrix


class DataError(ValueError):
    """Malformed input file."""


@dataclass(frozen=True, eq=False)
class ReturnsMatrix:
    names: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"returns must be a T x n table, got shape {values.shape}")
        if values.shape[0] < 2:
            raise DataError(f"need at least 2 observations, got T={values.shape[0]}")
        if len(self.names) != values.shape[1]:
            raise DataError(f"{len(self.names)} asset names for {values.shape[1]} columns")
        if not np.all(np.isfinite(values)):
            t, i = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite return at observation {t + 1}, asset {self.names[i]!r}")
        values.flags.writeable = False
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]


def _cell(text, where):
    try:
        x = float(text)
    except ValueError:
        raise DataError(f"{where}: non-numeric value {text!r}") from None
    if not math.isfinite(x):
        raise DataError(f"{where}: non-finite value {text!r}")
    return x


def _rows(path):
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if any(c.strip() for c in row)]


def load_returns(path):
    """Returns table with a header row of asset names."""
    rows = _rows(path)
    if not rows:
        raise DataError(f"{path}: empty file")
    names = [c.strip() for c in rows[0]]
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise DataError(f"{path}: row {r} has {len(row)} fields, header has {len(names)}")
        data.append([_cell(c.strip(), f"{path}: row {r}, column {names[c_i]!r}") for c_i, c in enumerate(row)])
    if len(data) < 2:
        raise DataError(f"{path}: need at least 2 observations, got T={len(data)}")
    return ReturnsMatrix(tuple(names), np.array(data))


def _matrix(path):
    rows = _rows(path)
    if not rows:
        raise DataError(f"{path}: empty file")
    width = len(rows[0])
    out = []
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataError(f"{path}: row {r} has {len(row)} fields, expected {width}")
        out.append([_cell(c.strip(), f"{path}: row {r}, column {c_i + 1}") for c_i, c in enumerate(row)])
    return np.array(out)


def load_covariance(path):
    """n x n covariance CSV without header, symmetrized on load."""
    a = _matrix(path)
    if a.shape[0] != a.shape[1]:
        raise DataError(f"{path}: covariance must be square, got {a.shape[0]} x {a.shape[1]}")
    try:
        return CovarianceMatrix(a)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def load_mean(path):
    """Single CSV row of expected returns."""
    a = _matrix(path)
    if a.shape[0] != 1:
        raise DataError(f"{path}: mean file must hold a single row, got {a.shape[0]}")
    return a[0]


def sample_moments(returns):
    """Column means and unbiased (T - 1) sample covariance."""
    x = returns.values
    mu = x.mean(axis=0)
    # shift by the first observation first: exact zeros for constant columns
    d = x - x[0]
    centered = d - d.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    return mu, CovarianceMatrix(cov)
