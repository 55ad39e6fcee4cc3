"""Readers and writers for the on-disk data formats."""

from __future__ import annotations

import csv
import io
import os

import numpy as np
import scipy.sparse as sp

from ..core import DataError, ParseError

_LABELS = {1.0: 1.0, -1.0: -1.0, 0.0: -1.0}


def parse_libsvm(stream, n_features: int | None = None):
    """Parse LIBSVM text (``label idx:val ...``, 1-based indices).

    Accepts a path, a text stream or a string with newlines.  Labels must be
    ``+1/-1`` or ``1/0``; zero is mapped to ``-1``.

    Returns
    -------
    A : scipy.sparse.csr_matrix, shape (m, n)
    b : ndarray of +-1
    """
    if isinstance(stream, (str, os.PathLike)) and "\n" not in str(stream):
        opener = open
        if str(stream).endswith(".bz2"):
            import bz2

            opener = bz2.open
        with opener(stream, "rt") as fh:
            try:
                return parse_libsvm(fh, n_features)
            except ParseError as exc:
                raise ParseError(exc.message, exc.line, path=str(stream)) from None
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    labels, indptr, indices, data = [], [0], [], []
    n = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            lab = float(tokens[0])
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        if lab not in _LABELS:
            raise ParseError(f"label {tokens[0]!r} is not binary (+1/-1 or 1/0)", lineno)
        labels.append(_LABELS[lab])
        last = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"malformed token {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"malformed token {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} is not 1-based", lineno)
            if idx <= last:
                raise ParseError(f"indices not increasing at {tok!r}", lineno)
            last = idx
            indices.append(idx - 1)
            data.append(val)
        n = max(n, last)
        indptr.append(len(indices))
    if not labels:
        raise ParseError("no data rows")
    if n_features is not None:
        if n_features < n:
            raise DataError(f"data has {n} features, more than n_features={n_features}")
        n = n_features
    A = sp.csr_matrix((np.asarray(data), np.asarray(indices, dtype=np.int64),
                       np.asarray(indptr, dtype=np.int64)), shape=(len(labels), n))
    return A, np.asarray(labels)


def write_libsvm(path, A, b):
    A = sp.csr_matrix(A)
    with open(path, "w") as fh:
        for i in range(A.shape[0]):
            row = A.getrow(i)
            order = np.argsort(row.indices)
            toks = [f"{int(row.indices[j]) + 1}:{float(row.data[j])!r}" for j in order]
            fh.write(("+1" if b[i] > 0 else "-1") + (" " + " ".join(toks) if toks else "") + "\n")


def read_returns_csv(path, log_returns: bool = False):
    """Read a ``periods x assets`` CSV with a ticker header.

    With ``log_returns=True`` the values are prices and are converted to
    ``100 [log P_{t+1} - log P_t]``.  Returns ``(tickers, n x T matrix)``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ParseError("need a header and at least one data row", path=str(path))
    tickers = [t.strip() for t in rows[0]]
    vals = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(tickers):
            raise ParseError(f"expected {len(tickers)} columns, got {len(row)}", lineno, path=str(path))
        try:
            vals.append([float(c) for c in row])
        except ValueError:
            raise ParseError("non-numeric value", lineno, path=str(path)) from None
    M = np.asarray(vals)
    if log_returns:
        from .mvsk import log_returns as _lr

        return tickers, _lr(M)
    return tickers, M.T


def write_returns_csv(path, tickers, table):
    """``table`` is ``periods x assets``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(tickers)
        for row in np.asarray(table):
            w.writerow([repr(float(v)) for v in row])
