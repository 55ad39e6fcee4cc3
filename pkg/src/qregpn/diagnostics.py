"""Certificates and post-hoc analysis of solutions and residual histories."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .core import CompositeProblem, NotCheckable
from .model import outer_residual
from .prox import SUPPORT_TOL, L1Norm, SimplexIndicator, ZeroFunction


class CertKind(str, enum.Enum):
    FIRST_ORDER = "FirstOrder"
    SECOND_ORDER = "SecondOrder"
    ERROR_BOUND_L1 = "ErrorBoundL1"


# Per evidence entry: exceed tol (">"), clear -tol (">=-") or stay within tol ("<=").
_RULES = {
    (CertKind.SECOND_ORDER, "l1"): {"margin": ">", "H_min": ">=-"},
    (CertKind.SECOND_ORDER, "smooth"): {"H_min": ">=-"},
    (CertKind.SECOND_ORDER, "simplex"): {"H_min": ">=-", "sampled_min": ">=-"},
    (CertKind.ERROR_BOUND_L1, "l1"): {"sigma_min_H_minus_I": ">", "sigma_min_HJJ": ">",
                                      "margin": ">"},
    (CertKind.FIRST_ORDER, "any"): {"residual": "<="},
}


@dataclass
class Certificate:
    kind: CertKind
    passed: bool
    evidence: dict
    tolerance: float
    regime: str = "any"
    note: str = ""

    def recheck(self) -> bool:
        """Recompute ``passed`` from ``evidence`` and ``tolerance`` alone."""
        return _decide(self.kind, self.regime, self.evidence, self.tolerance)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "passed": self.passed,
                "evidence": {k: float(v) for k, v in self.evidence.items()},
                "tolerance": self.tolerance, "regime": self.regime, "note": self.note}

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(kind=CertKind(d["kind"]), passed=d["passed"], evidence=dict(d["evidence"]),
                   tolerance=d["tolerance"], regime=d.get("regime", "any"),
                   note=d.get("note", ""))


def _decide(kind, regime, evidence, tol) -> bool:
    rules = _RULES[(kind, regime)]
    for key, op in rules.items():
        v = evidence[key]
        if op == ">" and not v > tol:
            return False
        if op == ">=-" and not v >= -tol:
            return False
        if op == "<=" and not v <= tol:
            return False
    return True


def _make(kind, regime, evidence, tol, note=""):
    return Certificate(kind=kind, passed=_decide(kind, regime, evidence, tol),
                       evidence=evidence, tolerance=tol, regime=regime, note=note)


def first_order_check(problem: CompositeProblem, x, eps: float) -> Certificate:
    _, r = outer_residual(problem, x)
    return _make(CertKind.FIRST_ORDER, "any", {"residual": r}, eps)


@dataclass
class RateEstimate:
    orders: list
    summary: Optional[float]
    tail_start: Optional[int]

    @property
    def estimable(self) -> bool:
        return self.summary is not None


def estimate_rate(residuals: Sequence[float], tail_threshold: float = 1e-2,
                  min_tail: int = 4) -> RateEstimate:
    """Empirical convergence orders ``log r_{k+1} / log r_k`` over the tail.

    The tail starts where ``r`` first reaches ``tail_threshold``; with
    fewer than ``min_tail`` positive residuals there, ``summary`` is ``None``.
    """
    r = [float(v) for v in residuals]
    start = next((i for i, v in enumerate(r) if 0 < v <= tail_threshold), None)
    if start is None:
        return RateEstimate(orders=[], summary=None, tail_start=None)
    tail = [v for v in r[start:] if v > 0 and math.isfinite(v)]
    orders = []
    for a, b in zip(tail, tail[1:]):
        p = math.log(b) / math.log(a)
        if math.isfinite(p):
            orders.append(p)
    if len(tail) < min_tail or len(orders) < 1:
        return RateEstimate(orders=orders, summary=None, tail_start=start)
    return RateEstimate(orders=orders, summary=float(np.median(orders[-3:])), tail_start=start)


def count_nonzeros(x) -> int:
    """Smallest number of largest-magnitude entries carrying 99.9% of ``||x||_1``."""
    a = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    total = a.sum()
    if total == 0:
        return 0
    csum = np.cumsum(a)
    return int(np.searchsorted(csum, 0.999 * total, side="left") + 1)


def _hess_block(problem: CompositeProblem, x, idx, cap: int):
    idx = np.asarray(idx, dtype=np.int64)
    f = problem.f
    if idx.size == 0:
        return np.zeros((0, 0))
    if problem.dim <= cap:
        H = f.hess_dense(x)
        if H is not None:
            return H[np.ix_(idx, idx)]
    if hasattr(f, "hess_block"):
        if idx.size > cap:
            raise NotCheckable(f"restricted block of size {idx.size} exceeds cap {cap}")
        return f.hess_block(x, idx)
    if idx.size > cap:
        raise NotCheckable(f"restricted block of size {idx.size} exceeds cap {cap}")
    hv = f.hess_at(x)
    n = problem.dim
    cols = []
    for i in idx:
        e = np.zeros(n)
        e[i] = 1.0
        cols.append(hv(e)[idx])
    B = np.array(cols).T
    return 0.5 * (B + B.T)


def _full_hessian(problem: CompositeProblem, x, cap: int):
    return _hess_block(problem, x, np.arange(problem.dim), cap)


def _min_eig(B):
    if B.size == 0:
        return math.inf
    return float(scipy.linalg.eigvalsh(0.5 * (B + B.T))[0])


def _l1_margin(problem, x, lam, support):
    grad = problem.f.gradient(x)
    off = ~support
    if not off.any():
        return math.inf
    return float(lam - np.abs(grad[off]).max())


def second_order_check(problem: CompositeProblem, x, tol: float = 1e-8, seed: int = 0,
                       n_samples: int = 10_000, cap: int = 2000) -> Certificate:
    """Evidence that ``x`` is a second-order stationary point.

    * l1 term: strict complementarity margin and the smallest eigenvalue of
      the Hessian restricted to the support.
    * simplex: smallest eigenvalue on the tangent space of the active face,
      plus the minimum curvature over sampled feasible directions.  This is
      sufficient evidence, not a proof.
    * no nonsmooth term: smallest Hessian eigenvalue.
    """
    x = np.asarray(x, dtype=float)
    g = problem.g
    if isinstance(g, L1Norm):
        support = np.abs(x) > SUPPORT_TOL
        idx = np.flatnonzero(support)
        H_min = _min_eig(_hess_block(problem, x, idx, cap))
        margin = _l1_margin(problem, x, g.lam, support)
        ev = {"margin": margin, "H_min": H_min, "support_size": float(idx.size)}
        return _make(CertKind.SECOND_ORDER, "l1", ev, tol)
    if isinstance(g, SimplexIndicator):
        face = np.flatnonzero(x > SUPPORT_TOL)
        H = _full_hessian(problem, x, cap)
        HF = H[np.ix_(face, face)]
        k = face.size
        if k > 1:
            # orthonormal basis of {d : sum d = 0} within the face
            Q, _ = np.linalg.qr(np.eye(k) - 1.0 / k)
            Z = Q[:, : k - 1]
            H_min = _min_eig(Z.T @ HF @ Z)
        else:
            H_min = math.inf
        rng = np.random.default_rng(seed)
        pts = rng.dirichlet(np.ones(problem.dim), size=n_samples)
        vert = np.eye(problem.dim)
        D = np.vstack([pts, vert]) - x
        norms = np.linalg.norm(D, axis=1)
        keep = norms > 1e-12
        D = D[keep] / norms[keep, None]
        curv = np.einsum("ij,jk,ik->i", D, H, D)
        sampled = float(curv.min()) if curv.size else math.inf
        ev = {"H_min": H_min, "sampled_min": sampled, "face_size": float(k)}
        return _make(CertKind.SECOND_ORDER, "simplex", ev, tol,
                     note="sufficient evidence from tangent-space and sampled directions")
    if isinstance(g, ZeroFunction):
        H_min = _min_eig(_full_hessian(problem, x, cap))
        return _make(CertKind.SECOND_ORDER, "smooth", {"H_min": H_min}, tol)
    raise NotCheckable(f"no second-order test for {type(g).__name__}")


def error_bound_check_l1(problem: CompositeProblem, x, tol: float = 1e-8,
                         cap: int = 2000) -> Certificate:
    """Checks nonsingularity of ``H - I`` and ``H_JJ`` plus strict complementarity.

    Passing certifies the hypothesis under which the residual gives a local
    Lipschitzian error bound.
    """
    g = problem.g
    if not isinstance(g, L1Norm):
        raise NotCheckable("error-bound certificate needs an l1 term")
    x = np.asarray(x, dtype=float)
    support = np.abs(x) > SUPPORT_TOL
    idx = np.flatnonzero(support)
    H = _full_hessian(problem, x, cap)
    n = problem.dim
    s_HI = float(scipy.linalg.svdvals(H - np.eye(n))[-1])
    HJJ = H[np.ix_(idx, idx)]
    s_JJ = float(scipy.linalg.svdvals(HJJ)[-1]) if idx.size else math.inf
    margin = _l1_margin(problem, x, g.lam, support)
    ev = {"sigma_min_H_minus_I": s_HI, "sigma_min_HJJ": s_JJ, "margin": margin}
    return _make(CertKind.ERROR_BOUND_L1, "l1", ev, tol)
