"""Mean-variance-skewness-kurtosis portfolio selection on the simplex."""

from __future__ import annotations

import itertools

import numpy as np

from ..core import CompositeProblem, DataError, SmoothOracle
from ..prox import SimplexIndicator

MAX_ASSETS = 150
PAPER_WEIGHTS = (0.29, 0.21, 0.4, 0.1)


def sample_moments(returns):
    """Sample mean and central co-moments of an ``n x T`` return matrix.

    Returns ``(mu, Sigma, S, Kt)`` with ``S`` flattened to ``n x n^2`` and
    ``Kt`` to ``n x n^3``; all use the ``1/T`` normalization.
    """
    R = np.asarray(returns, dtype=float)
    if R.ndim != 2 or R.shape[1] < 2:
        raise ValueError("returns must be n x T with T >= 2")
    n, T = R.shape
    mu = R.mean(axis=1)
    X = R - mu[:, None]
    Sigma = X @ X.T / T
    X2 = (X[:, None, :] * X[None, :, :]).reshape(n * n, T)
    S = X @ X2.T / T
    X3 = (X2[:, None, :] * X[None, :, :]).reshape(n ** 3, T)
    Kt = X @ X3.T / T
    return mu, Sigma, S, Kt


def _spot_check_symmetry(S, Kt, n, rng, tol=1e-8, samples=200):
    S3 = S.reshape(n, n, n)
    K4 = Kt.reshape(n, n, n, n)
    scale_s = max(1.0, float(np.abs(S).max()))
    scale_k = max(1.0, float(np.abs(Kt).max()))
    for _ in range(samples):
        idx = tuple(rng.integers(0, n, size=3))
        ref = S3[idx]
        for p in itertools.permutations(idx):
            if abs(S3[p] - ref) > tol * scale_s:
                raise DataError(f"coskewness not symmetric at {idx}")
        idx = tuple(rng.integers(0, n, size=4))
        ref = K4[idx]
        for p in itertools.permutations(idx):
            if abs(K4[p] - ref) > tol * scale_k:
                raise DataError(f"cokurtosis not symmetric at {idx}")


class MVSKObjective(SmoothOracle):
    """``-w1 mu.x + w2 x'Sx - w3 S[x,x,x] + w4 K[x,x,x,x]``.

    One pass over the cokurtosis tensor gives value, gradient and Hessian,
    so the last evaluation is cached.
    """

    def __init__(self, mu, Sigma, S, Kt, omega=PAPER_WEIGHTS, check_symmetry=True, seed=0):
        mu = np.asarray(mu, dtype=float).ravel()
        n = mu.size
        if n > MAX_ASSETS:
            raise DataError(f"at most {MAX_ASSETS} assets are supported")
        Sigma = np.asarray(Sigma, dtype=float)
        S = np.asarray(S, dtype=float).reshape(n, n * n)
        Kt = np.asarray(Kt, dtype=float).reshape(n, n ** 3)
        if Sigma.shape != (n, n):
            raise DataError("Sigma must be n x n")
        if np.abs(Sigma - Sigma.T).max() > 1e-8 * max(1.0, np.abs(Sigma).max()):
            raise DataError("Sigma is not symmetric")
        omega = tuple(float(w) for w in omega)
        if len(omega) != 4 or min(omega) < 0 or abs(sum(omega) - 1.0) > 1e-12:
            raise DataError("omega must be four nonnegative weights summing to 1")
        if check_symmetry:
            _spot_check_symmetry(S, Kt, n, np.random.default_rng(seed))
        self.dim = n
        self.mu, self.Sigma, self.S, self.Kt = mu, Sigma, S, Kt
        self.omega = omega
        self._last = None

    def _eval(self, x):
        x = np.asarray(x, dtype=float)
        if self._last is not None and np.array_equal(self._last[0], x):
            return self._last[1]
        n = self.dim
        w1, w2, w3, w4 = self.omega
        Sx = (self.S.reshape(n * n, n) @ x).reshape(n, n)       # S[., ., x]
        Kxx = ((self.Kt.reshape(n ** 3, n) @ x).reshape(n * n, n) @ x).reshape(n, n)
        Sigx = self.Sigma @ x
        Sxx = Sx @ x
        Kxxx = Kxx @ x
        val = -w1 * (self.mu @ x) + w2 * (x @ Sigx) - w3 * (x @ Sxx) + w4 * (x @ Kxxx)
        grad = -w1 * self.mu + 2 * w2 * Sigx - 3 * w3 * Sxx + 4 * w4 * Kxxx
        hess = 2 * w2 * self.Sigma - 6 * w3 * Sx + 12 * w4 * Kxx
        hess = 0.5 * (hess + hess.T)
        out = (float(val), grad, hess)
        self._last = (x.copy(), out)
        return out

    def value(self, x):
        return self._eval(x)[0]

    def value_grad(self, x):
        v, g, _ = self._eval(x)
        return v, g

    def gradient(self, x):
        return self._eval(x)[1]

    def hess_dense(self, x):
        return self._eval(x)[2]

    def hess_vec(self, x, v):
        return self._eval(x)[2] @ v

    def hess_at(self, x):
        H = self._eval(x)[2]
        return lambda v: H @ v


def mvsk_oracle(mu, Sigma, S, Kt, omega=PAPER_WEIGHTS, name="mvsk") -> CompositeProblem:
    f = MVSKObjective(mu, Sigma, S, Kt, omega)
    return CompositeProblem(f=f, g=SimplexIndicator(f.dim), name=name)


def synthetic_prices(n, T, seed=0, vol=0.03):
    """Price paths (``(T+1) x n``) with skewed, heavy-tailed weekly log-returns."""
    rng = np.random.default_rng(seed)
    drift = rng.normal(0.002, 0.002, size=n)
    scale = vol * rng.uniform(0.5, 1.5, size=n)
    market = rng.standard_t(5, size=T) * 0.6
    idio = rng.standard_t(4, size=(T, n))
    skew = rng.uniform(-0.5, 0.2, size=n)
    shocks = 0.6 * market[:, None] + idio
    shocks = shocks + skew * (shocks ** 2 - 1.0) / 4.0
    logret = drift + scale * shocks / 2.0
    logp = np.vstack([np.zeros(n), np.cumsum(logret, axis=0)]) + np.log(rng.uniform(20, 200, size=n))
    return np.exp(logp)


def log_returns(prices):
    """``100 [log P_{t+1} - log P_t]`` per asset; input ``T x n``, output ``n x (T-1)``."""
    P = np.asarray(prices, dtype=float)
    if np.any(P <= 0):
        raise DataError("prices must be positive for log returns")
    return (100.0 * np.diff(np.log(P), axis=0)).T
