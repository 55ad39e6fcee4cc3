"""Proximal operators for the nonsmooth terms used by the benchmarks."""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from . import kernels
from .core import ProxFriendly

# Coordinates with |x_i| above this count as nonzero in certificates.
SUPPORT_TOL = 1e-10
SIMPLEX_TOL = 1e-12


def prox_l1(z, alpha: float, lam: float) -> np.ndarray:
    """Soft-thresholding at level ``alpha * lam``."""
    if alpha <= 0 or lam <= 0:
        raise ValueError("alpha and lambda must be positive")
    return kernels.soft_threshold(z, alpha * lam)


def project_simplex(z) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) = 1}`` (sort-and-shift)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("project_simplex expects a nonempty vector")
    return kernels.project_simplex(z)


class ZeroFunction(ProxFriendly):
    def __init__(self, dim: Optional[int] = None):
        self.dim = dim

    def value(self, x):
        return 0.0

    def prox(self, z, alpha):
        return np.array(z, dtype=float)


class L1Norm(ProxFriendly):
    """``lam * ||x||_1``."""

    def __init__(self, lam: float, dim: Optional[int] = None):
        if not lam > 0:
            raise ValueError("lambda must be positive")
        self.lam = float(lam)
        self.dim = dim

    def value(self, x):
        return self.lam * float(np.abs(x).sum())

    def prox(self, z, alpha):
        return prox_l1(z, alpha, self.lam)


class SimplexIndicator(ProxFriendly):
    """Indicator of the probability simplex."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def domain_member(self, x):
        x = np.asarray(x)
        return bool(x.min() >= -SIMPLEX_TOL and abs(x.sum() - 1.0) <= SIMPLEX_TOL * max(1, x.size))

    def value(self, x):
        return 0.0 if self.domain_member(x) else math.inf

    def prox(self, z, alpha):
        return project_simplex(z)


class SeparableProx(ProxFriendly):
    """Generic separable ``g(x) = sum_i h(x_i)``.

    ``h`` is a scalar convex function; the scalar prox is found by bounded
    1-D minimisation unless ``scalar_prox`` is supplied.  Slow, meant for
    small problems and for cross-checking closed forms.
    """

    def __init__(self, h: Callable[[float], float],
                 scalar_prox: Optional[Callable[[float, float], float]] = None,
                 dim: Optional[int] = None, bracket: float = 1e6):
        self.h = h
        self.scalar_prox = scalar_prox
        self.dim = dim
        self.bracket = bracket

    def value(self, x):
        return float(sum(self.h(float(v)) for v in np.asarray(x)))

    def _prox1(self, zi, alpha):
        if self.scalar_prox is not None:
            return self.scalar_prox(zi, alpha)
        from scipy.optimize import minimize_scalar

        obj = lambda t: (t - zi) ** 2 / (2 * alpha) + self.h(t)
        res = minimize_scalar(obj, bounds=(zi - self.bracket, zi + self.bracket),
                              method="bounded", options={"xatol": 1e-12})
        return res.x

    def prox(self, z, alpha):
        return np.array([self._prox1(float(v), alpha) for v in np.asarray(z)])


def moreau_envelope(g: ProxFriendly, alpha: float, z) -> float:
    """Value of ``min_p { ||p - z||^2 / (2 alpha) + g(p) }``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z = np.asarray(z, dtype=float)
    p = g.prox(z, alpha)
    d = p - z
    return float(d @ d) / (2.0 * alpha) + g.value(p)
