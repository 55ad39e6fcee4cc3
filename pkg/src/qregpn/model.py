"""Regularized quadratic model of ``f`` and the two KKT residual maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import CompositeProblem, NumericalError, ProxFriendly, eval_objective


@dataclass(frozen=True)
class ModelState:
    """``f_k(y) = f(x_k) + <g_k, d> + 0.5 <d, H d> + (L/q) ||d||^q``, ``d = y - x_k``.

    Everything except ``L`` depends only on the anchor, so
    :meth:`with_L` is how the outer backtracking loop reuses the cache.
    """

    anchor: np.ndarray
    grad_anchor: np.ndarray
    hess: Callable[[np.ndarray], np.ndarray]
    L: float
    q: float
    F_anchor: float
    theta_anchor: float
    hess_dense: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def with_L(self, L: float) -> "ModelState":
        return replace(self, L=float(L), _cache=self._cache)

    def hv(self, v):
        if self.hess_dense is not None:
            return self.hess_dense @ v
        return self.hess(v)

    def value_grad(self, y):
        """Model value and gradient sharing one Hessian product."""
        d = y - self.anchor
        hd = self.hv(d)
        nd = math.sqrt(float(d @ d))
        val = self.theta_anchor + float(self.grad_anchor @ d) + 0.5 * float(d @ hd) \
            + (self.L / self.q) * nd ** self.q
        return val, self.grad_anchor + hd + _reg_grad(d, nd, self.L, self.q)

    def hess_norm_estimate(self, iters: int = 5, seed: int = 0) -> float:
        """Power-iteration estimate of ``||H||``; cached per anchor."""
        key = ("hnorm", iters)
        if key not in self._cache:
            rng = np.random.default_rng(seed)
            v = rng.standard_normal(self.anchor.shape[0])
            v /= np.linalg.norm(v)
            est = 0.0
            for _ in range(iters):
                w = self.hv(v)
                est = float(np.linalg.norm(w))
                if est == 0.0:
                    break
                v = w / est
            self._cache[key] = est
        return self._cache[key]


def _reg_grad(d, nd, L, q):
    # ||d||^(q-2) d, taken as 0 at d = 0 for every q (continuity limit).
    if nd == 0.0:
        return np.zeros_like(d)
    if q == 2.0:
        return L * d
    return (L * nd ** (q - 2.0)) * d


def build_model(problem: CompositeProblem, x_k, L: float, q: float,
                dense_cap: int = 2000) -> ModelState:
    if not L > 0:
        raise ValueError("L must be positive")
    x_k = np.array(x_k, dtype=float)
    fx, gx = problem.f.value_grad(x_k)
    if not math.isfinite(fx) or not np.all(np.isfinite(gx)):
        raise NumericalError("non-finite f or gradient at the model anchor")
    F = fx + problem.g.value(x_k)
    dense = None
    if problem.dim <= dense_cap:
        dense = problem.f.hess_dense(x_k)
    return ModelState(anchor=x_k, grad_anchor=np.asarray(gx, dtype=float),
                      hess=problem.f.hess_at(x_k), L=float(L), q=float(q),
                      F_anchor=float(F), theta_anchor=float(fx), hess_dense=dense)


def model_value(m: ModelState, y) -> float:
    d = np.asarray(y, dtype=float) - m.anchor
    nd = math.sqrt(float(d @ d))
    return (m.theta_anchor + float(m.grad_anchor @ d) + 0.5 * float(d @ m.hv(d))
            + (m.L / m.q) * nd ** m.q)


def model_grad(m: ModelState, y) -> np.ndarray:
    d = np.asarray(y, dtype=float) - m.anchor
    nd = math.sqrt(float(d @ d))
    return m.grad_anchor + m.hv(d) + _reg_grad(d, nd, m.L, m.q)


def outer_residual(problem: CompositeProblem, x, grad=None):
    """``R(x) = x - prox_g(x - grad f(x))`` and its norm."""
    x = np.asarray(x, dtype=float)
    if grad is None:
        grad = problem.f.gradient(x)
    R = x - problem.g.prox(x - grad, 1.0)
    return R, float(np.linalg.norm(R))


def subproblem_residual(m: ModelState, g: ProxFriendly, y, grad=None):
    """``R_k(y) = y - prox_g(y - grad f_k(y))`` and its norm."""
    y = np.asarray(y, dtype=float)
    if grad is None:
        grad = model_grad(m, y)
    R = y - g.prox(y - grad, 1.0)
    return R, float(np.linalg.norm(R))


def subproblem_objective(m: ModelState, g: ProxFriendly, y) -> float:
    gy = g.value(y)
    if gy == math.inf:
        return math.inf
    return model_value(m, y) + gy


__all__ = ["ModelState", "build_model", "model_value", "model_grad",
           "outer_residual", "subproblem_residual", "subproblem_objective",
           "eval_objective"]
