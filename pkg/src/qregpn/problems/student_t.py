"""l1-regularized Student's t regression with partial DCT measurements."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import kernels
from ..core import CompositeProblem, SmoothOracle
from ..prox import L1Norm
from .operators import MatrixOperator, PartialDCT


class StudentTLoss(SmoothOracle):
    """``f(x) = sum_i log(1 + ((Ax - b)_i)^2 / nu)``; nonconvex."""

    def __init__(self, A, b, nu):
        if not nu > 0:
            raise ValueError("nu must be positive")
        self.op = A if hasattr(A, "matvec") else MatrixOperator(A)
        self.b = np.asarray(b, dtype=float).ravel()
        self.nu = float(nu)
        self.dim = self.op.shape[1]

    def _terms(self, x):
        return kernels.student_t_terms(self.op.matvec(x) - self.b, self.nu)

    def value(self, x):
        return self._terms(x)[0]

    def value_grad(self, x):
        val, d1, _ = self._terms(x)
        return val, self.op.rmatvec(d1)

    def gradient(self, x):
        return self.value_grad(x)[1]

    def hess_vec(self, x, v):
        return self.hess_at(x)(v)

    def hess_at(self, x):
        _, _, d2 = self._terms(x)
        op = self.op
        return lambda v: op.rmatvec(d2 * op.matvec(v))

    def hess_block(self, x, idx):
        _, _, d2 = self._terms(x)
        C = self.op.columns(idx)
        return C.T @ (d2[:, None] * C)


def student_t_oracle(A, b, nu, lam, name="student_t") -> CompositeProblem:
    f = StudentTLoss(A, b, nu)
    return CompositeProblem(f=f, g=L1Norm(lam, dim=f.dim), name=name)


DYNAMIC_RANGES = (20, 40, 60, 80)


@dataclass(frozen=True)
class StudentTParams:
    n: int = 4096
    d: float = 20.0
    seed: int = 0
    c_lambda: float = 0.1
    nu: float = 0.25
    noise_scale: float = 0.1
    fast_dct: bool = True

    def to_json(self) -> str:
        return json.dumps({"family": "student_t", **asdict(self)}, sort_keys=True)


@dataclass
class StudentTInstance:
    params: StudentTParams
    A: PartialDCT
    b: np.ndarray
    x_true: np.ndarray
    lam: float

    @property
    def problem(self) -> CompositeProblem:
        return student_t_oracle(self.A, self.b, self.params.nu, self.lam,
                                name=f"student_t(n={self.params.n},d={self.params.d:g})")

    @property
    def x0(self) -> np.ndarray:
        return self.A.rmatvec(self.b)


def gen_student_t_instance(n=4096, d=20.0, seed=0, c_lambda=0.1, nu=0.25,
                           noise_scale=0.1, fast_dct=True) -> StudentTInstance:
    """Sparse spike signal, random cosine measurements, t(4) noise.

    ``m = floor(n / 8)`` rows and ``floor(n / 40)`` nonzeros.  ``d`` is the
    dynamic range in dB; values outside 20/40/60/80 are allowed.
    """
    p = StudentTParams(n=int(n), d=float(d), seed=int(seed), c_lambda=float(c_lambda),
                       nu=float(nu), noise_scale=float(noise_scale), fast_dct=bool(fast_dct))
    if p.n < 8:
        raise ValueError("n must be at least 8")
    rng = np.random.default_rng(p.seed)
    m = p.n // 8
    s = max(p.n // 40, 1)
    x_true = np.zeros(p.n)
    support = rng.choice(p.n, size=s, replace=False)
    sign = rng.choice((-1.0, 1.0), size=s)
    eta2 = rng.uniform(0.0, 1.0, size=s)
    x_true[support] = sign * 10.0 ** (p.d * eta2 / 20.0)
    J = rng.choice(p.n, size=m, replace=False)
    A = PartialDCT(p.n, J, fast=p.fast_dct)
    # t(4) draw as normal / sqrt(chi2(4)/4)
    noise = rng.standard_normal(m) / np.sqrt(rng.chisquare(4, size=m) / 4.0)
    b = A.matvec(x_true) + p.noise_scale * noise
    grad0 = StudentTLoss(A, b, p.nu).gradient(np.zeros(p.n))
    lam = p.c_lambda * float(np.abs(grad0).max())
    if not lam > 0 or not math.isfinite(lam):
        raise ValueError("degenerate instance: zero gradient at the origin")
    return StudentTInstance(params=p, A=A, b=b, x_true=x_true, lam=lam)
