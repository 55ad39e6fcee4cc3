"""l1-regularized logistic regression."""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..core import CompositeProblem, DataError, SmoothOracle
from ..prox import L1Norm
from .operators import MatrixOperator


class LogisticLoss(SmoothOracle):
    """``f(x) = (1/m) sum_i log(1 + exp(-b_i (Ax)_i))``."""

    def __init__(self, A, b):
        b = np.asarray(b, dtype=float).ravel()
        if not np.all(np.isin(b, (-1.0, 1.0))):
            raise DataError("labels must be -1 or +1")
        self.op = A if hasattr(A, "matvec") else MatrixOperator(A)
        m, n = self.op.shape
        if m != b.size or m < 1 or n < 1:
            raise DataError(f"A has shape {self.op.shape} but b has {b.size} entries")
        self.b = b
        self.m, self.dim = m, n

    def _terms(self, x):
        return kernels.logistic_terms(self.op.matvec(x), self.b)

    def value(self, x):
        return self._terms(x)[0] / self.m

    def value_grad(self, x):
        loss, s = self._terms(x)
        return loss / self.m, self.op.rmatvec(-self.b * s) / self.m

    def gradient(self, x):
        return self.value_grad(x)[1]

    def _weights(self, x):
        _, s = self._terms(x)
        return s * (1.0 - s) / self.m

    def hess_vec(self, x, v):
        return self.op.rmatvec(self._weights(x) * self.op.matvec(v))

    def hess_at(self, x):
        w = self._weights(x)
        op = self.op
        return lambda v: op.rmatvec(w * op.matvec(v))

    def hess_block(self, x, idx):
        C = self.op.columns(idx)
        return C.T @ (self._weights(x)[:, None] * C)


def logistic_oracle(A, b, lam, name="logistic") -> CompositeProblem:
    f = LogisticLoss(A, b)
    return CompositeProblem(f=f, g=L1Norm(lam, dim=f.dim), name=name)


def gen_logistic_instance(m=200, n=50, seed=0, noise=0.5, sparsity=0.1):
    """Gaussian design with labels from a noisy sparse linear classifier.

    Returns ``(A, b, x_true)``; identical seeds give identical arrays.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    k = max(1, int(sparsity * n))
    x_true[:k] = rng.standard_normal(k)
    b = np.where(A @ x_true + noise * rng.standard_normal(m) > 0, 1.0, -1.0)
    return A, b, x_true
