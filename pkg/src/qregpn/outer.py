"""Outer loop: regularization backtracking, candidate selection, stopping."""

from __future__ import annotations

import logging
import math
import time
from typing import Callable, Optional

import numpy as np

from .core import (CompositeProblem, IterationTrace, InvariantViolation, NumericalError,
                   Selection, SolveReport, SolverConfig, Status, eval_objective,
                   validate_config)
from .diagnostics import estimate_rate
from .inner import InnerConfig, solve_subproblem
from .model import ModelState, build_model, model_grad, model_value, outer_residual

log = logging.getLogger(__name__)

_STALL = 1e3 * np.finfo(float).eps


def bb_init(x_new, x_old, hess_vec_new, hess_vec_old, q, l_min, l_max, fallback=None):
    """Barzilai-Borwein style estimate of the regularization parameter.

    ``hess_vec_*`` are callables ``v -> H v`` at ``x_new`` and ``x_old``.
    """
    s = np.asarray(x_new, dtype=float) - np.asarray(x_old, dtype=float)
    ns = float(np.linalg.norm(s))
    if ns == 0.0:
        return fallback if fallback is not None else l_min
    num = float(np.linalg.norm(hess_vec_new(s) - hess_vec_old(s)))
    ratio = num / ns ** (q - 1.0)
    if not math.isfinite(ratio):
        ratio = l_max
    return max(min(ratio, l_max), l_min)


def check_inexact(m: ModelState, g, y, rho: float) -> bool:
    """Inexactness and model-descent test, recomputed from scratch."""
    y = np.asarray(y, dtype=float)
    gy = g.value(y)
    if gy == math.inf:
        return False
    theta_y = model_value(m, y) + gy
    v = y - g.prox(y - model_grad(m, y), 1.0)
    r = float(np.linalg.norm(v))
    step = float(np.linalg.norm(y - m.anchor))
    return r <= rho * m.L * step ** (m.q - 1.0) and theta_y < m.F_anchor


def check_descent(F_xk, F_y, L, q, sigma, step_norm) -> bool:
    return F_y <= F_xk - (sigma * L / q) * step_norm ** q


def select_next(problem: CompositeProblem, y, v):
    """Pick ``y`` if ``F(y) < F(y - v)``, otherwise ``y - v``.

    Returns ``(x_next, selection, F_y, F_next)``.
    """
    y = np.asarray(y, dtype=float)
    w = y - v
    F_y = eval_objective(problem, y)
    F_w = eval_objective(problem, w)
    if F_y < F_w:
        if F_y == math.inf:
            raise InvariantViolation("selected a point outside dom g")
        return y, Selection.Y, F_y, F_y
    return w, Selection.Y_MINUS_V, F_y, F_w


def estimate_L0(problem: CompositeProblem, x0, max_doublings: int = 60) -> float:
    """Smallest ``L`` in ``1, 2, 4, ...`` passing the prox-gradient majorization test."""
    x0 = np.asarray(x0, dtype=float)
    f0, g0 = problem.f.value_grad(x0)
    L = 1.0
    for _ in range(max_doublings + 1):
        xs = problem.g.prox(x0 - g0 / L, 1.0 / L)
        d = xs - x0
        if problem.f.value(xs) <= f0 + float(g0 @ d) + 0.5 * L * float(d @ d) + 1e-14 * abs(f0):
            return L
        L *= 2.0
    raise NumericalError("L0 doubling exceeded 2^60")


def rho_from_L0(L0: float) -> float:
    return 0.9 / (1.1 + L0)


def solve(problem: CompositeProblem, x0, cfg: SolverConfig = SolverConfig(),
          inner: Optional[InnerConfig] = None, record_iterates: bool = False,
          callback: Optional[Callable[[IterationTrace], None]] = None) -> SolveReport:
    """Minimize ``f + g`` from ``x0``.

    ``record_iterates=True`` stores ``x_k`` and ``y_k`` in every trace so the
    per-step guarantees can be audited afterwards.
    """
    cfg = validate_config(cfg)
    if inner is None:
        inner = InnerConfig(max_iters=cfg.max_inner)
    t_start = time.perf_counter()
    x = np.array(x0, dtype=float)
    if not problem.g.domain_member(x):
        raise ValueError("x0 must lie in dom g")
    F_x = eval_objective(problem, x)
    if not math.isfinite(F_x):
        raise NumericalError("F(x0) is not finite")
    q = cfg.q

    L0 = estimate_L0(problem, x)
    rho = cfg.rho if cfg.rho is not None else rho_from_L0(L0)
    L_first = min(max(L0, cfg.l_min), cfg.l_max)
    L_next = L_first

    traces: list[IterationTrace] = []
    status = Status.MAX_ITERATIONS
    stop = "max_outer"
    model: Optional[ModelState] = None

    def report(status, x, F_x, r_x, stop):
        rate = estimate_rate([t.outer_resid for t in traces] + [r_x]).summary
        return SolveReport(status=status, x_final=x, F_final=F_x, resid_final=r_x,
                           traces=traces, rate_estimate=rate, stop_reason=stop, L0=L0,
                           rho=rho, wall_s=time.perf_counter() - t_start)

    for k in range(cfg.max_outer + 1):
        t_iter = time.perf_counter()
        try:
            new_model = build_model(problem, x, 1.0, q, dense_cap=cfg.hess_dense_cap)
        except NumericalError:
            _, r_x = outer_residual(problem, x)
            return report(Status.NUMERICAL_ERROR, x, F_x, r_x, "non-finite oracle")
        _, r_x = outer_residual(problem, x, grad=new_model.grad_anchor)
        if r_x <= cfg.eps:
            return report(Status.CONVERGED, x, F_x, r_x, "residual")
        if k == cfg.max_outer:
            break
        if k > 0 and cfg.l_init == "bb":
            L_next = bb_init(x, model.anchor, new_model.hv, model.hv, q,
                             cfg.l_min, cfg.l_max, fallback=L_next)
        model = new_model

        L = L_next
        accepted = None
        for j in range(cfg.max_backtracks + 1):
            m = model.with_L(L)
            try:
                res = solve_subproblem(m, problem.g, rho, inner)
            except NumericalError:
                return report(Status.NUMERICAL_ERROR, x, F_x, r_x, "subproblem")
            if res.satisfied:
                step = float(np.linalg.norm(res.y - x))
                F_y = eval_objective(problem, res.y)
                if check_descent(F_x, F_y, L, q, cfg.sigma, step):
                    accepted = (j, res, step)
                    break
            if j < cfg.max_backtracks:
                L *= cfg.tau
        if accepted is None:
            log.info("k=%d: subproblem unsolved after %d escalations", k, cfg.max_backtracks)
            return report(Status.INNER_FAILURE, x, F_x, r_x, "inner_failure")

        j, res, step = accepted
        x_next, sel, F_y, F_next = select_next(problem, res.y, res.v)
        if not math.isfinite(F_next):
            return report(Status.NUMERICAL_ERROR, x, F_x, r_x, "non-finite objective")
        tr = IterationTrace(k=k, L_k=L, j_k=j, step_norm=step, inner_resid=res.resid,
                            outer_resid=r_x, F_xk=F_x, selection=sel,
                            inner_iters=res.iters,
                            wall_ms=1e3 * (time.perf_counter() - t_iter),
                            F_y=F_y, F_next=F_next)
        if record_iterates:
            tr.x, tr.y = x.copy(), res.y.copy()
        traces.append(tr)
        if callback is not None:
            callback(tr)
        log.debug("k=%d L=%.3e j=%d inner=%d r=%.3e F=%.10e", k, L, j, res.iters, r_x, F_x)

        L_next = L if cfg.l_init == "bb" else L_first
        moved = float(np.linalg.norm(x_next - x))
        x, F_x = x_next, F_next
        if moved <= _STALL * (1.0 + float(np.linalg.norm(x))):
            _, r_x = outer_residual(problem, x)
            st = Status.CONVERGED if r_x <= cfg.eps else Status.NUMERICAL_ERROR
            return report(st, x, F_x, r_x, "stalled")

    _, r_x = outer_residual(problem, x)
    return report(status, x, F_x, r_x, stop)
