import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from qregpn import (CompositeProblem, ConfigError, InnerConfig, L1Norm, ZeroFunction,
                    build_model, check_inexact, fbe_value, forward_backward_step,
                    model_grad, model_value, moreau_envelope, solve_subproblem,
                    subproblem_residual)
from qregpn.model import subproblem_objective
from qregpn.problems import gen_student_t_instance
from conftest import Quadratic, smooth_problem


def random_state(seed, n=6, lam=0.4, q=2.5, L=1.3):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    f = Quadratic(B @ B.T / n - 0.5 * np.eye(n), rng.normal(size=n))
    p = CompositeProblem(f=f, g=L1Norm(lam, dim=n))
    x = rng.normal(size=n)
    return p, build_model(p, x, L, q), rng


def test_fbe_forms_agree_on_100_states():
    for seed in range(100):
        p, m, rng = random_state(seed)
        y = m.anchor + rng.normal(size=m.anchor.size)
        gamma = rng.uniform(0.05, 1.0)
        grad = model_grad(m, y)
        dual = (model_value(m, y) - 0.5 * gamma * float(grad @ grad)
                + moreau_envelope(p.g, gamma, y - gamma * grad))
        assert fbe_value(m, p.g, gamma, y) == pytest.approx(dual, rel=1e-12, abs=1e-12)


def test_fbe_at_fixed_point_equals_theta():
    f = Quadratic(np.diag([2.0, 3.0]), np.array([0.0, 0.0]))
    p = CompositeProblem(f=f, g=L1Norm(1.0, dim=2))
    m = build_model(p, np.zeros(2), 1.0, 3.0)
    y = np.zeros(2)  # grad 0 lies in the subdifferential of the l1 term at 0
    assert fbe_value(m, p.g, 0.3, y) == pytest.approx(subproblem_objective(m, p.g, y))


def test_fbe_smooth_case():
    p, m, rng = random_state(3)
    g = ZeroFunction()
    y = rng.normal(size=6)
    grad = model_grad(m, y)
    assert fbe_value(m, g, 0.2, y) == pytest.approx(model_value(m, y) - 0.1 * grad @ grad,
                                                    rel=1e-13)


def test_forward_backward_step():
    p, m, rng = random_state(5)
    y = rng.normal(size=6)
    R, _ = subproblem_residual(m, p.g, y)
    np.testing.assert_allclose(forward_backward_step(m, p.g, 1.0, y), y - R, atol=1e-15)
    # 1-D quadratic model with g = 0 and q = 2: step 1/curvature lands on the minimizer
    f = Quadratic([[3.0]], [1.0])
    m1 = build_model(smooth_problem(f), np.array([2.0]), 1.0, 2.0)
    y1 = forward_backward_step(m1, ZeroFunction(1), 1.0 / 4.0, np.array([2.0]))
    assert model_grad(m1, y1)[0] == pytest.approx(0.0, abs=1e-14)
    # a stationary point maps to itself
    assert forward_backward_step(m1, ZeroFunction(1), 0.1, y1)[0] == pytest.approx(y1[0])


def cubic_newton_oracle(H, grad, L):
    """Minimizer of <g,d> + d'Hd/2 + L|d|^3/3 for positive definite H.

    Stationarity gives d(t) = -(H + L t I)^{-1} g with t = |d(t)|; the scalar
    equation is solved by bracketing.
    """
    n = grad.size

    def d_of(t):
        return -np.linalg.solve(H + L * t * np.eye(n), grad)

    t = brentq(lambda t: np.linalg.norm(d_of(t)) - t, 0.0, np.linalg.norm(grad) / 1e-12,
               xtol=1e-15)
    return d_of(t)


def test_strongly_convex_subproblem_converges_to_newton_oracle():
    rng = np.random.default_rng(11)
    B = rng.normal(size=(8, 8))
    H = B @ B.T + np.eye(8)
    f = Quadratic(H, rng.normal(size=8))
    p = smooth_problem(f)
    x = rng.normal(size=8)
    L = 50.0
    m = build_model(p, x, L, 3.0)
    rho = 0.5
    res = solve_subproblem(m, p.g, rho, InnerConfig(max_iters=50))
    assert res.satisfied and res.iters <= 50
    assert res.resid <= rho * L * np.linalg.norm(res.y - x) ** 2
    # with a tight tolerance the iterate reaches the unique minimizer
    tight = solve_subproblem(m, p.g, 1e-9, InnerConfig(max_iters=200))
    d = cubic_newton_oracle(H, f.gradient(x), L)
    np.testing.assert_allclose(tight.y - x, d, rtol=1e-7, atol=1e-10)


def coordinate_descent(theta, y0, sweeps=400):
    y = y0.copy()
    for _ in range(sweeps):
        for i in range(y.size):
            def h(t, i=i):
                z = y.copy()
                z[i] = t
                return theta(z)
            y[i] = minimize_scalar(h, bounds=(y[i] - 5, y[i] + 5), method="bounded",
                                   options={"xatol": 1e-13}).x
    return y


def test_moves_from_subproblem_stationary_anchor():
    # anchor is not stationary for F, so R_k(x) = R(x) != 0 and the solver must move
    f = Quadratic(np.array([[2.0, 0.5], [0.5, 1.0]]), np.array([-3.0, 1.0]))
    p = CompositeProblem(f=f, g=L1Norm(0.5, dim=2))
    x = np.array([0.2, 0.1])
    m = build_model(p, x, 1.0, 3.0)
    res = solve_subproblem(m, p.g, 1e-8)
    assert res.satisfied and np.linalg.norm(res.y - x) > 0
    assert check_inexact(m, p.g, res.y, 1e-8)
    y_cd = coordinate_descent(lambda z: subproblem_objective(m, p.g, z), x)
    np.testing.assert_allclose(res.y, y_cd, atol=1e-6)


def test_budget_of_one_iteration():
    inst = gen_student_t_instance(512, 40, seed=1)
    p = inst.problem
    m = build_model(p, inst.x0, 1e-3, 2.3)
    res = solve_subproblem(m, p.g, 1e-3, InnerConfig(max_iters=1))
    assert not res.satisfied
    assert res.iters == 1
    assert res.theta_y <= m.F_anchor
    assert res.theta_y == pytest.approx(subproblem_objective(m, p.g, res.y))


def test_satisfied_results_pass_independent_check():
    for seed in range(20):
        p, m, _ = random_state(seed, L=5.0)
        rho = 0.3
        res = solve_subproblem(m, p.g, rho)
        if not res.satisfied:
            continue
        _, r = subproblem_residual(m, p.g, res.y)
        assert r <= rho * m.L * np.linalg.norm(res.y - m.anchor) ** (m.q - 1)
        assert subproblem_objective(m, p.g, res.y) < m.F_anchor
        assert check_inexact(m, p.g, res.y, rho)


def test_nonmonotone_line_search_contract():
    inst = gen_student_t_instance(512, 20, seed=2)
    p = inst.problem
    m = build_model(p, inst.x0, 1e-2, 2.3)
    hist = []
    solve_subproblem(m, p.g, 1e-6, InnerConfig(max_iters=300), history=hist)
    qn = [h for h in hist if h[0] == "qn"]
    assert qn, "expected quasi-Newton steps"
    for _, phi, ref in qn:
        assert phi <= ref


def test_forward_backward_mode_is_monotone():
    inst = gen_student_t_instance(512, 20, seed=4)
    p = inst.problem
    m = build_model(p, inst.x0, 1e-2, 2.3)
    hist = []
    solve_subproblem(m, p.g, 1e-8, InnerConfig(max_iters=200, forward_backward_only=True),
                     history=hist)
    thetas = [m.F_anchor] + [h[1] for h in hist]
    assert all(h[0] == "fb" for h in hist)
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(thetas, thetas[1:]))


def proximal_gradient_oracle(m, g, iters=20000):
    # fixed step 1/(||H|| + L (1 + |d|)) is safe on the bounded level set reached here
    H = m.hess_dense
    step = 1.0 / (np.linalg.norm(H, 2) + 4 * m.L)
    y = m.anchor.copy()
    for _ in range(iters):
        y = g.prox(y - step * model_grad(m, y), step)
    return subproblem_objective(m, g, y)


def test_convex_instance_matches_proximal_gradient():
    rng = np.random.default_rng(9)
    B = rng.normal(size=(5, 5))
    f = Quadratic(B @ B.T + 0.1 * np.eye(5), rng.normal(size=5))
    p = CompositeProblem(f=f, g=L1Norm(0.3, dim=5))
    m = build_model(p, np.zeros(5), 0.5, 3.0)
    res = solve_subproblem(m, p.g, 1e-12, InnerConfig(max_iters=1000))
    assert res.theta_y == pytest.approx(proximal_gradient_oracle(m, p.g), abs=1e-8)


@pytest.mark.parametrize("kw", [dict(max_iters=0), dict(gamma_init=0.0), dict(gamma_shrink=1.0),
                                dict(lbfgs_memory=-1), dict(nonmonotone_window=0),
                                dict(tau_shrink=0.0), dict(min_tau=0.0), dict(beta=1.0)])
def test_inner_config_validation(kw):
    with pytest.raises(ConfigError):
        InnerConfig(**kw)


def test_inner_defaults():
    c = InnerConfig()
    assert (c.max_iters, c.gamma_shrink, c.lbfgs_memory, c.nonmonotone_window,
            c.tau_shrink, c.min_tau) == (1000, 0.5, 5, 10, 0.5, 1e-8)
