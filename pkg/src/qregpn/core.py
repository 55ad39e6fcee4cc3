"""Problem abstraction, solver configuration and run records."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class QregError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(QregError, ValueError):
    def __init__(self, field_name: str, message: str = ""):
        self.field = field_name
        super().__init__(f"{field_name}: {message}" if message else field_name)


class NumericalError(QregError, ArithmeticError):
    pass


class InvariantViolation(QregError, AssertionError):
    pass


class DataError(QregError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line, self.message, self.path = line, message, path
        where = ":".join(str(p) for p in (path, line) if p is not None)
        super().__init__(f"{where}: {message}" if where else message)


class NotCheckable(QregError):
    pass


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    INNER_FAILURE = "InnerFailure"
    NUMERICAL_ERROR = "NumericalError"


class Selection(str, enum.Enum):
    Y = "Y"
    Y_MINUS_V = "Y_MINUS_V"


class SmoothOracle:
    """Twice differentiable ``f`` with value, gradient and Hessian products.

    Subclasses implement ``value``, ``gradient`` and ``hess_vec``.  Two
    optional hooks make the solver cheaper:

    ``value_grad(x)``
        value and gradient in one pass (default calls both).
    ``hess_at(x)``
        returns a callable ``v -> H(x) v`` with anything that depends only on
        ``x`` precomputed.  The model keeps one of these per outer iteration.
    ``hess_dense(x)``
        full Hessian, or ``None`` when the family works matrix-free.
    """

    dim: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess_vec(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value(x), self.gradient(x)

    def hess_at(self, x: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        x = np.array(x, dtype=float)
        return lambda v: self.hess_vec(x, v)

    def hess_dense(self, x: np.ndarray) -> Optional[np.ndarray]:
        return None


class ProxFriendly:
    """Closed convex ``g`` with a cheap proximal mapping.

    ``value`` may return ``math.inf`` outside the domain.
    """

    dim: Optional[int] = None

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, z: np.ndarray, alpha: float) -> np.ndarray:
        raise NotImplementedError

    def domain_member(self, x: np.ndarray) -> bool:
        return math.isfinite(self.value(x))


@dataclass(frozen=True)
class CompositeProblem:
    f: SmoothOracle
    g: ProxFriendly
    name: str = "problem"

    def __post_init__(self):
        gdim = getattr(self.g, "dim", None)
        if gdim is not None and gdim != self.f.dim:
            raise DataError(f"f has dim {self.f.dim} but g has dim {gdim}")

    @property
    def dim(self) -> int:
        return self.f.dim


def eval_objective(problem: CompositeProblem, x: np.ndarray) -> float:
    """``F(x) = f(x) + g(x)``; ``inf`` off the domain of ``g``.

    Infinity is an ordinary float here, so ``inf > finite`` comparisons are
    what the selection and descent tests rely on.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(f"expected shape ({problem.dim},), got {x.shape}")
    gx = problem.g.value(x)
    if gx == math.inf:
        return math.inf
    fx = problem.f.value(x)
    if not math.isfinite(fx):
        raise NumericalError(f"f(x) is not finite ({fx}) at a domain point")
    return float(fx + gx)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the outer method.

    ``rho=None`` means derive it from the initial Lipschitz estimate as
    ``0.9 / (1.1 + L0)``.  ``delta`` is carried for completeness of the
    published parameter list but is not used by the algorithm.
    """

    q: float = 3.0
    rho: Optional[float] = None
    sigma: float = 1e-4
    tau: float = 10.0
    l_min: float = 1e-12
    l_max: float = 1e8
    eps: float = 1e-6
    max_outer: int = 500
    max_inner: int = 1000
    max_backtracks: int = 60
    seed: int = 0
    delta: float = 1e-5
    l_init: str = "bb"
    hess_dense_cap: int = 2000

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


def _check(cond: bool, name: str, msg: str):
    if not cond:
        raise ConfigError(name, msg)


def validate_config(raw: SolverConfig) -> SolverConfig:
    """Range-check every field of ``raw`` and return it.

    Raises
    ------
    ConfigError
        naming the first offending field.
    """
    c = raw
    _check(isinstance(c.q, (int, float)) and 2.0 <= c.q <= 3.0, "q", "must lie in [2, 3]")
    _check(c.rho is None or 0.0 < c.rho < 1.0, "rho", "must lie in (0, 1)")
    _check(0.0 < c.sigma < 1.0, "sigma", "must lie in (0, 1)")
    _check(c.tau > 1.0, "tau", "must be > 1")
    _check(c.l_min > 0.0, "l_min", "must be > 0")
    _check(c.l_max > c.l_min, "l_max", "must exceed l_min")
    _check(c.eps > 0.0, "eps", "must be > 0")
    for name in ("max_outer", "max_inner", "max_backtracks", "hess_dense_cap"):
        v = getattr(c, name)
        _check(isinstance(v, (int, np.integer)) and v >= 1, name, "must be a positive integer")
    _check(isinstance(c.seed, (int, np.integer)) and c.seed >= 0, "seed", "must be unsigned")
    _check(c.delta > 0.0, "delta", "must be > 0")
    _check(c.l_init in ("bb", "constant"), "l_init", "must be 'bb' or 'constant'")
    return c


@dataclass
class IterationTrace:
    k: int
    L_k: float
    j_k: int
    step_norm: float
    inner_resid: float
    outer_resid: float
    F_xk: float
    selection: Selection
    inner_iters: int
    wall_ms: float
    F_y: float = math.nan
    F_next: float = math.nan
    # Iterates are kept only when the solve is asked to record them (audits).
    x: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    y: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    CSV_COLUMNS = ("k", "L_k", "j_k", "inner_iters", "step_norm", "r_k_y",
                   "r_xk", "F_xk", "selection", "wall_ms")

    def csv_row(self) -> list:
        r = lambda v: repr(float(v))
        return [int(self.k), r(self.L_k), int(self.j_k), int(self.inner_iters),
                r(self.step_norm), r(self.inner_resid), r(self.outer_resid),
                r(self.F_xk), self.selection.value, f"{self.wall_ms:.3f}"]

    def to_dict(self) -> dict:
        return {
            "k": self.k, "L_k": self.L_k, "j_k": self.j_k,
            "step_norm": self.step_norm, "inner_resid": self.inner_resid,
            "outer_resid": self.outer_resid, "F_xk": self.F_xk,
            "selection": self.selection.value, "inner_iters": self.inner_iters,
            "wall_ms": self.wall_ms, "F_y": self.F_y, "F_next": self.F_next,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationTrace":
        d = dict(d)
        d["selection"] = Selection(d["selection"])
        return cls(**d)


@dataclass
class SolveReport:
    status: Status
    x_final: np.ndarray
    F_final: float
    resid_final: float
    traces: list = field(default_factory=list)
    rate_estimate: Optional[float] = None
    stop_reason: str = ""
    L0: Optional[float] = None
    rho: Optional[float] = None
    wall_s: float = 0.0
    certificates: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.traces)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "x_final": [float(v) for v in self.x_final],
            "F_final": self.F_final,
            "resid_final": self.resid_final,
            "traces": [t.to_dict() for t in self.traces],
            "rate_estimate": self.rate_estimate,
            "stop_reason": self.stop_reason,
            "L0": self.L0,
            "rho": self.rho,
            "wall_s": self.wall_s,
            "certificates": [c.to_dict() for c in self.certificates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        from .diagnostics import Certificate

        return cls(
            status=Status(d["status"]),
            x_final=np.asarray(d["x_final"], dtype=float),
            F_final=d["F_final"],
            resid_final=d["resid_final"],
            traces=[IterationTrace.from_dict(t) for t in d["traces"]],
            rate_estimate=d.get("rate_estimate"),
            stop_reason=d.get("stop_reason", ""),
            L0=d.get("L0"),
            rho=d.get("rho"),
            wall_s=d.get("wall_s", 0.0),
            certificates=[Certificate.from_dict(c) for c in d.get("certificates", [])],
        )
