import io
import math

import numpy as np
import pytest
import scipy.sparse as sp

from qregpn import DataError, ParseError, SolverConfig, Status, solve
from qregpn.problems import (MVSKObjective, PAPER_WEIGHTS, PartialDCT, dct_apply, dct_matrix,
                             gen_logistic_instance, gen_student_t_instance, log_returns,
                             logistic_oracle, mvsk_oracle, parse_libsvm, read_returns_csv,
                             sample_moments, student_t_oracle, synthetic_prices, write_libsvm,
                             write_returns_csv)
from conftest import fd_grad, rel_err

N_POINTS = 20


def fd_check(f, points, rng, grad_tol=1e-6, hv_tol=1e-5):
    for x in points:
        g = f.gradient(x)
        assert rel_err(g, fd_grad(f.value, x)) <= grad_tol
        v = rng.normal(size=x.size)
        h = 1e-6
        fd_hv = (f.gradient(x + h * v) - f.gradient(x - h * v)) / (2 * h)
        assert rel_err(f.hess_vec(x, v), fd_hv) <= hv_tol
        hv = f.hess_at(x)
        np.testing.assert_allclose(hv(v), f.hess_vec(x, v), rtol=1e-12, atol=1e-14)
        u = rng.normal(size=x.size)
        assert float(u @ f.hess_vec(x, v)) == pytest.approx(float(v @ f.hess_vec(x, u)),
                                                            rel=1e-10, abs=1e-12)


# ------------------------------------------------------------------ logistic

def test_logistic_values():
    p = logistic_oracle(np.array([[1.0]]), np.array([1.0]), 0.1)
    assert p.f.value(np.array([10.0])) == pytest.approx(math.log1p(math.exp(-10)), rel=1e-14)
    assert p.f.value(np.array([10.0])) == pytest.approx(4.54e-5, rel=1e-3)
    rng = np.random.default_rng(0)
    A = rng.normal(size=(9, 4))
    b = np.where(rng.normal(size=9) > 0, 1.0, -1.0)
    assert logistic_oracle(A, b, 1.0).f.value(np.zeros(4)) == pytest.approx(math.log(2))


def test_logistic_no_overflow():
    p = logistic_oracle(np.array([[1.0], [1.0]]), np.array([1.0, -1.0]), 0.1)
    v, g = p.f.value_grad(np.array([1e4]))
    assert np.isfinite(v) and np.all(np.isfinite(g))
    assert v == pytest.approx(1e4 / 2, rel=1e-12)


def test_logistic_labels():
    with pytest.raises(DataError):
        logistic_oracle(np.eye(2), np.array([1.0, 0.5]), 0.1)


@pytest.mark.parametrize("sparse", [False, True])
def test_logistic_derivatives(sparse):
    rng = np.random.default_rng(1)
    A = rng.normal(size=(40, 12)) * (rng.uniform(size=(40, 12)) < 0.5)
    b = np.where(rng.normal(size=40) > 0, 1.0, -1.0)
    f = logistic_oracle(sp.csr_matrix(A) if sparse else A, b, 0.1).f
    fd_check(f, [rng.normal(size=12) for _ in range(N_POINTS)], rng)
    # convexity and the closed-form gradient / Hessian
    for _ in range(N_POINTS):
        x, v = rng.normal(size=12), rng.normal(size=12)
        assert float(v @ f.hess_vec(x, v)) >= -1e-12
        u = A @ x
        s = 1 / (1 + np.exp(b * u))
        np.testing.assert_allclose(f.gradient(x), A.T @ (-b * s) / 40, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(f.hess_vec(x, v), A.T @ (s * (1 - s) * (A @ v)) / 40,
                                   rtol=1e-11, atol=1e-15)
    idx = np.array([0, 3, 7])
    x = rng.normal(size=12)
    H = np.column_stack([f.hess_vec(x, e) for e in np.eye(12)])
    np.testing.assert_allclose(f.hess_block(x, idx), H[np.ix_(idx, idx)], atol=1e-14)


def test_logistic_generator_is_seeded():
    a = gen_logistic_instance(30, 8, seed=4)
    b = gen_logistic_instance(30, 8, seed=4)
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)
    assert set(np.unique(a[1])) <= {-1.0, 1.0}


# ---------------------------------------------------------------- student t

def test_student_t_values():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(6, 4))
    x = rng.normal(size=4)
    p = student_t_oracle(A, A @ x, 0.25, 0.1)
    assert p.f.value(x) == 0.0
    np.testing.assert_allclose(p.f.gradient(x), 0.0, atol=1e-15)


def test_student_t_derivatives_and_nonconvexity():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(20, 10))
    b = rng.normal(size=20) * 2
    f = student_t_oracle(A, b, 0.25, 0.1).f
    fd_check(f, [rng.normal(size=10) for _ in range(N_POINTS)], rng)
    curv = [float(v @ f.hess_vec(x, v)) for x, v in
            ((rng.normal(size=10), rng.normal(size=10)) for _ in range(200))]
    assert min(curv) < 0
    assert f.value(rng.normal(size=10)) >= 0


def test_student_t_generator():
    a = gen_student_t_instance(1024, 20, seed=7)
    b = gen_student_t_instance(1024, 20, seed=7)
    np.testing.assert_array_equal(a.b, b.b)
    np.testing.assert_array_equal(a.x_true, b.x_true)
    np.testing.assert_array_equal(a.A.J, b.A.J)
    assert a.lam == b.lam
    assert a.A.shape == (128, 1024)
    assert np.count_nonzero(a.x_true) == 1024 // 40
    mags = np.abs(a.x_true[a.x_true != 0])
    assert mags.min() >= 1.0 and mags.max() <= 10.0
    grad0 = a.problem.f.gradient(np.zeros(1024))
    assert a.lam == pytest.approx(0.1 * np.abs(grad0).max())
    assert gen_student_t_instance(1000, 20, seed=0).A.shape == (125, 1000)
    assert gen_student_t_instance(1024, 30, seed=0).params.d == 30.0


def test_student_t_partial_dct_derivatives():
    rng = np.random.default_rng(8)
    inst = gen_student_t_instance(256, 40, seed=2)
    fd_check(inst.problem.f, [inst.x0 + rng.normal(size=256) for _ in range(N_POINTS)], rng)


def test_zero_noise_recovery():
    inst = gen_student_t_instance(1024, 20, seed=0, c_lambda=1e-3, noise_scale=0.0)
    rep = solve(inst.problem, inst.x0, SolverConfig(q=2.3, eps=1e-8))
    assert rep.status is Status.CONVERGED
    assert rel_err(rep.x_final, inst.x_true) <= 1e-2
    s = np.count_nonzero(inst.x_true)
    top = np.sort(np.argsort(-np.abs(rep.x_final))[:s])
    np.testing.assert_array_equal(top, np.flatnonzero(inst.x_true))


# ----------------------------------------------------------------------- DCT

def test_dct_hand_computed_n4():
    c = np.cos
    pi = np.pi
    expect = np.array([
        [0.5, 0.5, 0.5, 0.5],
        [math.sqrt(0.5) * c(pi * (2 * j + 1) / 8) for j in range(4)],
        [math.sqrt(0.5) * c(2 * pi * (2 * j + 1) / 8) for j in range(4)],
        [math.sqrt(0.5) * c(3 * pi * (2 * j + 1) / 8) for j in range(4)],
    ])
    np.testing.assert_allclose(dct_matrix(4), expect, atol=1e-15)
    np.testing.assert_allclose(expect[1], [0.6532814824381883, 0.2705980500730985,
                                           -0.2705980500730985, -0.6532814824381883], atol=1e-15)
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1.0
        np.testing.assert_allclose(dct_apply(e, np.arange(4)), expect[:, i], atol=1e-15)


def test_dct_first_column_unit_norm():
    e = np.zeros(64)
    e[0] = 1.0
    assert np.linalg.norm(dct_apply(e, np.arange(64))) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("fast", [True, False])
def test_partial_dct_adjoint_and_contraction(fast):
    rng = np.random.default_rng(5)
    n = 128
    J = rng.choice(n, 16, replace=False)
    A = PartialDCT(n, J, fast=fast)
    for _ in range(20):
        x, y = rng.normal(size=n), rng.normal(size=16)
        assert float(A.matvec(x) @ y) == pytest.approx(float(x @ A.rmatvec(y)), abs=1e-12)
        assert np.linalg.norm(A.matvec(x)) <= np.linalg.norm(x) + 1e-12
    full = PartialDCT(n, np.arange(n), fast=fast)
    x = rng.normal(size=n)
    assert np.linalg.norm(full.matvec(x)) == pytest.approx(np.linalg.norm(x), rel=1e-13)
    np.testing.assert_allclose(A.to_dense(), dct_matrix(n, rows=np.sort(J)), atol=1e-13)


def test_fast_and_direct_dct_agree():
    rng = np.random.default_rng(6)
    J = rng.choice(200, 30, replace=False)
    x = rng.normal(size=200)
    np.testing.assert_allclose(PartialDCT(200, J, fast=True).matvec(x),
                               PartialDCT(200, J, fast=False).matvec(x), atol=1e-12)


# ---------------------------------------------------------------------- MVSK

def random_moments(n, T, seed):
    return sample_moments(np.random.default_rng(seed).standard_t(5, size=(n, T)))


def test_sample_moments_examples():
    mu, S2, S3, K = sample_moments(np.full((3, 10), 2.5))
    np.testing.assert_allclose(mu, 2.5)
    assert not S2.any() and not S3.any() and not K.any()
    mu, S2, S3, K = sample_moments(np.array([[-1.0, 1.0]]))
    assert (mu[0], S2[0, 0], S3[0, 0], K[0, 0]) == (0.0, 1.0, 0.0, 1.0)


def test_sample_moments_against_direct_sums():
    rng = np.random.default_rng(10)
    R = rng.normal(size=(3, 25))
    mu, S2, S3, K = sample_moments(R)
    C = R - R.mean(axis=1, keepdims=True)
    n = 3
    for i in range(n):
        for j in range(n):
            assert S2[i, j] == pytest.approx(np.mean(C[i] * C[j]), abs=1e-14)
            for k in range(n):
                assert S3[i, j * n + k] == pytest.approx(np.mean(C[i] * C[j] * C[k]), abs=1e-14)
                assert S3[i, j * n + k] == S3[k, i * n + j] or \
                    S3[i, j * n + k] == pytest.approx(S3[k, i * n + j], abs=1e-15)
                for l in range(n):
                    assert K[i, j * n * n + k * n + l] == pytest.approx(
                        np.mean(C[i] * C[j] * C[k] * C[l]), abs=1e-14)


def test_mvsk_examples():
    n = 2
    p = mvsk_oracle(np.array([1.0, 0.0]), np.eye(2), np.zeros((2, 4)), np.zeros((2, 8)),
                    omega=(0.5, 0.5, 0.0, 0.0))
    assert p.f.value(np.array([1.0, 0.0])) == pytest.approx(0.0)
    mu, S2, S3, K = random_moments(4, 50, 0)
    lin = mvsk_oracle(mu, S2, S3, K, omega=(1.0, 0.0, 0.0, 0.0))
    x = np.full(4, 0.25)
    np.testing.assert_allclose(lin.f.hess_dense(x), 0.0)
    assert lin.f.value(x) == pytest.approx(-mu @ x)


def test_mvsk_derivatives_on_simplex():
    rng = np.random.default_rng(12)
    mu, S2, S3, K = random_moments(6, 80, 1)
    f = MVSKObjective(mu, S2, S3, K, PAPER_WEIGHTS)
    pts = [rng.dirichlet(np.ones(6)) for _ in range(N_POINTS)]
    fd_check(f, pts, rng)
    for x in pts[:5]:
        H = f.hess_dense(x)
        assert np.linalg.norm(H - H.T) <= 1e-10
        np.testing.assert_allclose(H, np.column_stack([f.hess_vec(x, e) for e in np.eye(6)]),
                                   rtol=1e-12, atol=1e-14)
        # independent contraction with einsum on the unflattened tensors
        n = 6
        S = S3.reshape(n, n, n)
        Kt = K.reshape(n, n, n, n)
        w1, w2, w3, w4 = PAPER_WEIGHTS
        val = (-w1 * mu @ x + w2 * x @ S2 @ x - w3 * np.einsum("ijk,i,j,k", S, x, x, x)
               + w4 * np.einsum("ijkl,i,j,k,l", Kt, x, x, x, x))
        assert f.value(x) == pytest.approx(val, rel=1e-12)
        assert x @ S2 @ x >= 0


def test_mvsk_symmetry_violation():
    mu, S2, S3, K = random_moments(3, 30, 2)
    S3 = S3.copy()
    S3[0, 1] += 1e-3
    with pytest.raises(DataError):
        MVSKObjective(mu, S2, S3, K)


def test_synthetic_prices_and_returns():
    P = synthetic_prices(5, 40, seed=3)
    assert P.shape == (41, 5) and P.min() > 0
    R = log_returns(P)
    assert R.shape == (5, 40)
    np.testing.assert_allclose(R[:, 0], 100 * (np.log(P[1]) - np.log(P[0])))
    np.testing.assert_array_equal(P, synthetic_prices(5, 40, seed=3))
    with pytest.raises(DataError):
        log_returns(np.array([[1.0], [0.0]]))


def test_returns_csv_round_trip(tmp_path):
    P = synthetic_prices(4, 10, seed=1)
    path = tmp_path / "p.csv"
    write_returns_csv(path, ["A", "B", "C", "D"], P)
    tick, R = read_returns_csv(path, log_returns=True)
    assert tick == ["A", "B", "C", "D"]
    np.testing.assert_allclose(R, log_returns(P), rtol=1e-12)
    tick, M = read_returns_csv(path)
    np.testing.assert_allclose(M, P.T)
    bad = tmp_path / "bad.csv"
    bad.write_text("A,B\n1,2\n3\n")
    with pytest.raises(ParseError) as info:
        read_returns_csv(bad)
    assert info.value.line == 3 and "bad.csv" in str(info.value)


# -------------------------------------------------------------------- LIBSVM

def test_parse_libsvm_example():
    A, b = parse_libsvm("+1 1:0.5 3:2.0\n-1 2:1.0")
    assert A.shape == (2, 3)
    np.testing.assert_array_equal(A.toarray()[0], [0.5, 0.0, 2.0])
    np.testing.assert_array_equal(b, [1.0, -1.0])


def test_parse_libsvm_zero_label_and_streams():
    A, b = parse_libsvm(io.StringIO("0 1:1\n1 2:3\n"))
    np.testing.assert_array_equal(b, [-1.0, 1.0])
    A, b = parse_libsvm("1 1:1\n", n_features=5)
    assert A.shape == (1, 5)


@pytest.mark.parametrize("text,line", [
    ("", None), ("+1 1:0.5\n-1 3:1 2:2\n", 2), ("+1 1:0.5\n+1 0:1\n", 2),
    ("+1 1-0.5\n", 1), ("+1 1:abc\n", 1), ("2 1:1\n", 1), ("x 1:1\n", 1),
])
def test_parse_libsvm_errors(tmp_path, text, line):
    path = tmp_path / "d.libsvm"
    path.write_text(text)
    with pytest.raises(ParseError) as info:
        parse_libsvm(path)
    assert info.value.line == line
    assert str(path) in str(info.value)


def test_libsvm_round_trip_and_bz2(tmp_path):
    import bz2

    A, b, _ = gen_logistic_instance(12, 5, seed=0)
    A[np.abs(A) < 0.5] = 0.0
    path = tmp_path / "x.libsvm"
    write_libsvm(path, A, b)
    A2, b2 = parse_libsvm(path, n_features=5)
    np.testing.assert_array_equal(A2.toarray(), A)
    np.testing.assert_array_equal(b2, b)
    zpath = tmp_path / "x.libsvm.bz2"
    zpath.write_bytes(bz2.compress(path.read_bytes()))
    A3, _ = parse_libsvm(zpath, n_features=5)
    np.testing.assert_array_equal(A3.toarray(), A)


def test_bundled_files_parse():
    from qregpn.cli import bundled

    A, b = parse_libsvm(bundled("tiny.libsvm"))
    assert A.shape[0] == b.size > 0
    tick, R = read_returns_csv(bundled("prices_n50.csv"), log_returns=True)
    assert len(tick) == 50 and R.shape[0] == 50
