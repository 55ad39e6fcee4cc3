import numpy as np
import pytest

from qregpn import CompositeProblem, L1Norm, SmoothOracle, ZeroFunction
from qregpn import _kernels_py

try:
    from qregpn import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _kernels_c is not None:
    BACKENDS.append(pytest.param(_kernels_c, id="cython"))


@pytest.fixture(params=BACKENDS)
def kern(request):
    return request.param


class Quadratic(SmoothOracle):
    """``0.5 x'Qx + c'x + c0`` with a dense Hessian."""

    def __init__(self, Q, c, c0=0.0):
        self.c0 = float(c0)
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.c = np.atleast_1d(np.asarray(c, dtype=float))
        self.dim = self.c.size

    def value(self, x):
        return 0.5 * float(x @ self.Q @ x) + float(self.c @ x) + self.c0

    def gradient(self, x):
        return self.Q @ x + self.c

    def hess_vec(self, x, v):
        return self.Q @ v

    def hess_dense(self, x):
        return self.Q.copy()


class Poly1D(SmoothOracle):
    """Scalar polynomial given by value, derivative and second derivative callables."""

    def __init__(self, f, df, d2f):
        self.f, self.df, self.d2f = f, df, d2f
        self.dim = 1

    def value(self, x):
        return float(self.f(x[0]))

    def gradient(self, x):
        return np.array([self.df(x[0])])

    def hess_vec(self, x, v):
        return self.d2f(x[0]) * np.asarray(v, dtype=float)

    def hess_dense(self, x):
        return np.array([[self.d2f(x[0])]])


def toy_1d(lam=1.0):
    """``f = 0.5 (x - 2)^2``, ``g = lam |x|``."""
    return CompositeProblem(f=Quadratic([[1.0]], [-2.0], 2.0), g=L1Norm(lam, dim=1), name="toy")


def smooth_problem(f):
    return CompositeProblem(f=f, g=ZeroFunction(f.dim))


def fd_grad(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))
