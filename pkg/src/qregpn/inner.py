"""Inexact solver for the regularized subproblem ``min f_k + g``.

The iteration follows the ZeroFPR template: it works on the
forward-backward envelope (FBE) of the subproblem, takes L-BFGS steps built
from the fixed-point residual, and falls back to the plain forward-backward
point whenever the line search gives up.  That fallback always decreases
the envelope, which is what makes the method safe on the nonconvex model.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigError, NumericalError, ProxFriendly
from .model import ModelState, model_grad


@dataclass(frozen=True)
class InnerConfig:
    """Settings of the subproblem solver.

    ``gamma_init=None`` picks ``1 / (||H||_est + L)``.  ``beta`` is the slack
    in the step-size test; ``beta=0`` is the plain quadratic upper bound.
    ``forward_backward_only`` disables quasi-Newton directions.
    """

    max_iters: int = 1000
    gamma_init: Optional[float] = None
    gamma_shrink: float = 0.5
    lbfgs_memory: int = 5
    nonmonotone_window: int = 10
    tau_shrink: float = 0.5
    min_tau: float = 1e-8
    beta: float = 0.05
    forward_backward_only: bool = False

    def __post_init__(self):
        if not (isinstance(self.max_iters, int) and self.max_iters >= 1):
            raise ConfigError("max_iters", "must be a positive integer")
        if self.gamma_init is not None and not self.gamma_init > 0:
            raise ConfigError("gamma_init", "must be > 0")
        if not 0 < self.gamma_shrink < 1:
            raise ConfigError("gamma_shrink", "must lie in (0, 1)")
        if not (isinstance(self.lbfgs_memory, int) and self.lbfgs_memory >= 0):
            raise ConfigError("lbfgs_memory", "must be a nonnegative integer")
        if not (isinstance(self.nonmonotone_window, int) and self.nonmonotone_window >= 1):
            raise ConfigError("nonmonotone_window", "must be >= 1")
        if not 0 < self.tau_shrink < 1:
            raise ConfigError("tau_shrink", "must lie in (0, 1)")
        if not self.min_tau > 0:
            raise ConfigError("min_tau", "must be > 0")
        if not 0 <= self.beta < 1:
            raise ConfigError("beta", "must lie in [0, 1)")


@dataclass
class InnerResult:
    y: np.ndarray
    resid: float
    theta_y: float
    iters: int
    satisfied: bool
    v: Optional[np.ndarray] = None
    gamma: float = math.nan


def forward_backward_step(m: ModelState, g: ProxFriendly, gamma: float, y, grad=None):
    """``T_gamma(y) = prox_{gamma g}(y - gamma grad f_k(y))``."""
    if grad is None:
        grad = model_grad(m, y)
    return g.prox(y - gamma * grad, gamma)


def fbe_value(m: ModelState, g: ProxFriendly, gamma: float, y) -> float:
    """Forward-backward envelope of ``f_k + g`` at ``y``."""
    y = np.asarray(y, dtype=float)
    fy, gy = m.value_grad(y)
    T = g.prox(y - gamma * gy, gamma)
    d = T - y
    return fy + float(gy @ d) + float(d @ d) / (2.0 * gamma) + g.value(T)


def _two_loop(mem, r):
    """L-BFGS product ``H r`` from (s, w, 1/<s,w>) pairs, oldest first."""
    q = r.copy()
    alphas = []
    for s, w, rho in reversed(mem):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * w
    s, w, _ = mem[-1]
    q *= float(s @ w) / float(w @ w)
    for (s, w, rho), a in zip(mem, reversed(alphas)):
        b = rho * float(w @ q)
        q += (a - b) * s
    return q


def _finite(*vals):
    for v in vals:
        if not math.isfinite(v):
            raise NumericalError("non-finite model value in the subproblem solver")


def solve_subproblem(m: ModelState, g: ProxFriendly, rho: float,
                     cfg: InnerConfig = InnerConfig(),
                     history: Optional[list] = None) -> InnerResult:
    """Find ``y`` with ``r_k(y) <= rho L ||y - x_k||^(q-1)`` and ``Theta_k(y) < Theta_k(x_k)``.

    Starts from the anchor.  Returns ``satisfied=False`` together with the
    lowest-``Theta_k`` point seen when the iteration budget runs out or the
    iteration stalls at a fixed point that fails the test.

    If ``history`` is a list, one tuple is appended per move:
    ``("qn", phi_new, reference)`` for an accepted line-search step and
    ``("fb", Theta_k(ybar))`` when the forward-backward point is taken.
    """
    x = m.anchor
    theta_x = m.F_anchor
    L, q = m.L, m.q
    beta = cfg.beta

    if cfg.gamma_init is not None:
        gamma = cfg.gamma_init
    else:
        gamma = 1.0 / (m.hess_norm_estimate() + L)

    y = x.copy()
    fy, gy = m.value_grad(y)
    gval_y = g.value(y)
    best = (math.inf, y, math.inf, None)  # theta, y, resid, v

    window = deque(maxlen=cfg.nonmonotone_window)
    mem = deque(maxlen=cfg.lbfgs_memory)
    pending = None  # (ybar_prev, Rbar_prev) waiting for R_gamma at the new point
    T_hint = None

    def check(pt, f_pt, g_pt, gval_pt):
        nonlocal best
        theta = f_pt + gval_pt
        if theta == math.inf:
            return None
        v = pt - g.prox(pt - g_pt, 1.0)
        r = float(np.linalg.norm(v))
        step = float(np.linalg.norm(pt - x))
        if theta < best[0]:
            best = (theta, pt, r, v)
        if theta < theta_x and r <= rho * L * step ** (q - 1.0):
            return InnerResult(y=pt, resid=r, theta_y=theta, iters=it, satisfied=True,
                               v=v, gamma=gamma)
        return None

    it = 0
    hit = None
    y_checked = False
    for it in range(1, cfg.max_iters + 1):
        # Step-size test on the forward-backward point.
        shrunk = False
        while True:
            ybar = T_hint if T_hint is not None else g.prox(y - gamma * gy, gamma)
            T_hint = None
            diff = ybar - y
            dd = float(diff @ diff)
            fbar, gbar = m.value_grad(ybar)
            _finite(fbar)
            ub = fy + float(gy @ diff) + (1.0 - beta) / (2.0 * gamma) * dd
            if fbar <= ub + 1e-15 * abs(fy):
                break
            gamma *= cfg.gamma_shrink
            shrunk = True
            if gamma < 1e-300:
                raise NumericalError("step size underflow in the subproblem solver")
        gval_bar = g.value(ybar)
        if shrunk:
            window.clear()
            mem.clear()
            pending = None
        phi_y = fy + float(gy @ diff) + dd / (2.0 * gamma) + gval_bar
        window.append(phi_y)

        if pending is not None and dd > 0:
            s = y - pending[0]
            w = (y - ybar) - pending[1]
            sw = float(s @ w)
            if sw > 1e-12 * math.sqrt(float(s @ s) * float(w @ w)):
                mem.append((s, w, 1.0 / sw))
        pending = None

        if not y_checked:
            hit = check(y, fy, gy, gval_y)
        if hit is None:
            hit = check(ybar, fbar, gbar, gval_bar)
        if hit is not None:
            break
        if dd == 0.0:
            # y is a fixed point of T_gamma (subproblem-stationary) yet fails the test.
            break

        T_bar = g.prox(ybar - gamma * gbar, gamma)
        R_bar = ybar - T_bar

        accepted = False
        if not cfg.forward_backward_only and float(R_bar @ R_bar) > 0:
            d = -_two_loop(mem, R_bar) if mem else -R_bar
            ref = max(window) - 0.5 * beta / (2.0 * gamma) * dd
            tau = 1.0
            while tau >= cfg.min_tau:
                cand = ybar + tau * d
                fc, gc = m.value_grad(cand)
                if math.isfinite(fc):
                    Tc = g.prox(cand - gamma * gc, gamma)
                    dc = Tc - cand
                    phi_c = fc + float(gc @ dc) + float(dc @ dc) / (2.0 * gamma) + g.value(Tc)
                    if phi_c <= ref:
                        if history is not None:
                            history.append(("qn", phi_c, ref))
                        pending = (ybar, R_bar)
                        y, fy, gy = cand, fc, gc
                        gval_y = g.value(y)
                        T_hint = Tc
                        y_checked = False
                        accepted = True
                        break
                elif math.isnan(fc):
                    raise NumericalError("NaN model value in line search")
                tau *= cfg.tau_shrink
        if not accepted:
            if history is not None:
                history.append(("fb", fbar + gval_bar))
            y, fy, gy, gval_y = ybar, fbar, gbar, gval_bar
            T_hint = T_bar
            y_checked = True

    if hit is not None:
        return hit
    theta, yb, r, v = best
    if yb is None or theta == math.inf:
        yb, r, v = x, math.inf, None
        theta = theta_x
    return InnerResult(y=yb, resid=r, theta_y=theta, iters=it, satisfied=False,
                       v=v, gamma=gamma)

