"""
Linear-model primitives: the immutable dataset, least-squares fits on a
candidate support, and the variance estimates every criterion consumes.

All fits go through a column-pivoted QR factorization of the sub-design so
that rank deficiency is detected instead of silently absorbed, and so the
Gram log-determinant comes for free from the R diagonal.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .errors import DataError, RankDeficient

Support = Tuple[int, ...]

_EPS = np.finfo(float).eps


def _frozen(arr):
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """
    Design matrix and response of one regression problem.

    Parameters
    ----------
    a : ndarray, shape (n, p)
        Design matrix. Stored as a read-only copy.
    y : ndarray, shape (n,)
        Response vector. Stored as a read-only copy.
    """

    a: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        y = _frozen(self.y)
        if a.ndim == 1:
            a = _frozen(a.reshape(-1, 1))
        if a.ndim != 2 or y.ndim != 1:
            raise DataError(f"expected 2-d design and 1-d response, got {a.shape} and {y.shape}")
        n, p = a.shape
        if n < 1 or p < 1:
            raise DataError(f"design must have n >= 1 and p >= 1, got {a.shape}")
        if y.shape[0] != n:
            raise DataError(f"response has {y.shape[0]} entries but design has {n} rows")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
            raise DataError("design and response must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def p(self) -> int:
        return self.a.shape[1]

    def scaled(self, factor: float) -> "Dataset":
        """Return a copy with the response multiplied by ``factor``."""
        return Dataset(self.a, self.y * factor)

    @classmethod
    def from_csv(cls, source: Union[str, os.PathLike, io.TextIOBase]) -> "Dataset":
        """
        Read a dataset whose first column is the response and remaining
        columns form the design. A header row is detected by the presence of
        any non-numeric field in the first row.
        """
        if isinstance(source, (str, os.PathLike)):
            with open(source, newline="", encoding="utf-8") as fh:
                rows = list(csv.reader(fh))
        else:
            rows = list(csv.reader(source))
        rows = [r for r in rows if r and any(f.strip() for f in r)]
        if rows and not all(_is_number(f) for f in rows[0]):
            rows = rows[1:]
        if not rows:
            raise DataError("CSV contains no data rows")
        width = len(rows[0])
        if width < 2:
            raise DataError("CSV needs a response column and at least one regressor column")
        values = []
        for lineno, row in enumerate(rows, start=1):
            if len(row) != width:
                raise DataError(f"data row {lineno} has {len(row)} fields, expected {width}")
            try:
                values.append([float(f) for f in row])
            except ValueError as exc:
                raise DataError(f"data row {lineno}: {exc}") from None
        arr = np.asarray(values, dtype=float)
        return cls(arr[:, 1:], arr[:, 0])

    def to_csv(self, path, header: bool = True) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if header:
                writer.writerow(["y"] + [f"a{j}" for j in range(self.p)])
            for yi, row in zip(self.y, self.a):
                writer.writerow([repr(float(yi))] + [repr(float(v)) for v in row])


def _is_number(field_value: str) -> bool:
    try:
        float(field_value)
    except ValueError:
        return False
    return True


def as_support(indices: Iterable[int], p: int, n: int | None = None) -> Support:
    """Validate a collection of column indices and return it as a tuple."""
    support = tuple(int(i) for i in indices)
    if len(set(support)) != len(support):
        raise DataError(f"support {support} contains duplicate indices")
    for i in support:
        if not 0 <= i < p:
            raise DataError(f"index {i} out of range for p={p}")
    if n is not None and len(support) >= n:
        raise DataError(f"support of size {len(support)} leaves no residual degrees of freedom (n={n})")
    return support


@dataclass(frozen=True)
class FitResult:
    """
    Ordinary least-squares fit of the response on one support.

    ``gram_logdet`` is ln|A_I^T A_I|, zero for the empty support.
    """

    support: Support
    coefficients: np.ndarray
    rss: float
    sigma2_hat: float
    gram_logdet: float = 0.0
    residual: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def k(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class NullVariance:
    sigma2_0: float


def _factor(a_sub: np.ndarray, support: Sequence[int]):
    """Pivoted economic QR with rank check; returns (q, r, perm)."""
    n, k = a_sub.shape
    q, r, perm = scipy.linalg.qr(a_sub, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = (diag[0] if k else 0.0) * max(n, k) * _EPS
    rank = int(np.sum(diag > tol))
    if rank < k or diag[0] == 0.0:
        raise RankDeficient(support, rank if diag[0] > 0 else 0, k)
    return q, r, perm


def ols_fit(dataset: Dataset, support: Sequence[int]) -> FitResult:
    """
    Least-squares fit of ``dataset.y`` on the columns in ``support``.

    Raises
    ------
    RankDeficient
        If the selected columns are numerically dependent.
    """
    support = as_support(support, dataset.p, dataset.n)
    y = dataset.y
    n = dataset.n
    k = len(support)
    if k == 0:
        rss = float(y @ y)
        return FitResult(support, np.zeros(0), rss, rss / n, 0.0, y.copy())
    q, r, perm = _factor(dataset.a[:, list(support)], support)
    qty = q.T @ y
    z = scipy.linalg.solve_triangular(r, qty)
    coef = np.empty(k)
    coef[perm] = z
    resid = y - q @ qty
    rss = float(resid @ resid)
    logdet = float(2.0 * np.sum(np.log(np.abs(np.diag(r)))))
    return FitResult(support, coef, rss, rss / n, logdet, resid)


def null_variance(dataset: Dataset) -> NullVariance:
    """Empty-model variance ||y||^2 / N."""
    y = dataset.y
    return NullVariance(float(y @ y) / dataset.n)


def projection_energy(dataset: Dataset, support: Sequence[int]) -> float:
    """Energy of the response captured by span(A_I), i.e. y^T P_I y."""
    support = as_support(support, dataset.p, dataset.n)
    if not support:
        return 0.0
    q, _, _ = _factor(dataset.a[:, list(support)], support)
    qty = q.T @ dataset.y
    return float(qty @ qty)


def gram_logdet(dataset: Dataset, support: Sequence[int]) -> float:
    """ln|A_I^T A_I| computed from the QR factor; 0 for the empty support."""
    support = as_support(support, dataset.p, dataset.n)
    if not support:
        return 0.0
    _, r, _ = _factor(dataset.a[:, list(support)], support)
    return float(2.0 * np.sum(np.log(np.abs(np.diag(r)))))
