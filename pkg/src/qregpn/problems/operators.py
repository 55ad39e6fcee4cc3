"""Linear operators used by the regression families."""

from __future__ import annotations

import numpy as np
import scipy.fft


class MatrixOperator:
    """Wraps a dense or scipy-sparse matrix."""

    def __init__(self, A):
        self.A = A
        self.shape = A.shape

    def matvec(self, x):
        return np.asarray(self.A @ x).ravel()

    def rmatvec(self, y):
        return np.asarray(self.A.T @ y).ravel()

    def columns(self, idx):
        cols = self.A[:, idx]
        return cols.toarray() if hasattr(cols, "toarray") else np.asarray(cols)


def dct_matrix(n: int, rows=None, cols=None) -> np.ndarray:
    """Block of the orthonormal DCT-II matrix, straight from the cosine formula."""
    k = np.arange(n) if rows is None else np.asarray(rows)
    j = np.arange(n) if cols is None else np.asarray(cols)
    C = np.cos(np.pi * np.outer(k, 2 * j + 1) / (2 * n))
    scale = np.where(k == 0, np.sqrt(1.0 / n), np.sqrt(2.0 / n))
    return C * scale[:, None]


def dct_apply(x, J, adjoint: bool = False, n: int | None = None):
    """Selected rows ``J`` of the orthonormal DCT-II of ``x`` (or the adjoint).

    For the adjoint, ``x`` has length ``len(J)`` and ``n`` must be given.
    """
    J = np.asarray(J)
    if not adjoint:
        return scipy.fft.dct(np.asarray(x, dtype=float), type=2, norm="ortho")[J]
    if n is None:
        raise ValueError("adjoint needs the signal length n")
    z = np.zeros(n)
    z[J] = x
    return scipy.fft.idct(z, type=2, norm="ortho")


class PartialDCT:
    """``x -> dct(x)[J]`` with its adjoint.

    ``fast=True`` uses the FFT-based transform; otherwise the selected rows
    are materialized once from the cosine formula (``O(n m)`` per product).
    """

    def __init__(self, n: int, J, fast: bool = True):
        self.n = int(n)
        self.J = np.sort(np.asarray(J, dtype=np.int64))
        if self.J.size and (self.J[0] < 0 or self.J[-1] >= n):
            raise ValueError("row indices out of range")
        self.shape = (self.J.size, self.n)
        self.fast = fast
        self._M = None if fast else dct_matrix(self.n, self.J)

    def matvec(self, x):
        if self._M is not None:
            return self._M @ x
        return dct_apply(x, self.J)

    def rmatvec(self, y):
        if self._M is not None:
            return self._M.T @ y
        return dct_apply(y, self.J, adjoint=True, n=self.n)

    def columns(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if self._M is not None:
            return self._M[:, idx]
        return dct_matrix(self.n, self.J, idx)

    def to_dense(self):
        return dct_matrix(self.n, self.J)
