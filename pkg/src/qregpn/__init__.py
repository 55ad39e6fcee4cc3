"""Inexact q-order regularized proximal Newton method for f + g."""

from .core import (CompositeProblem, ConfigError, DataError, IterationTrace,
                   InvariantViolation, NotCheckable, NumericalError, ParseError,
                   ProxFriendly, Selection, SmoothOracle, SolveReport, SolverConfig, Status,
                   eval_objective, validate_config)
from .diagnostics import (Certificate, CertKind, RateEstimate, count_nonzeros,
                          error_bound_check_l1, estimate_rate, first_order_check,
                          second_order_check)
from .inner import InnerConfig, InnerResult, fbe_value, forward_backward_step, solve_subproblem
from .kernels import BACKEND
from .model import (ModelState, build_model, model_grad, model_value, outer_residual,
                    subproblem_residual)
from .outer import (bb_init, check_descent, check_inexact, estimate_L0, select_next, solve)
from .prox import L1Norm, SimplexIndicator, ZeroFunction, moreau_envelope, project_simplex, prox_l1

__version__ = "0.1.0"

__all__ = [
    "CompositeProblem", "ConfigError", "DataError", "IterationTrace", "InvariantViolation",
    "NotCheckable", "NumericalError", "ParseError", "ProxFriendly", "Selection",
    "SmoothOracle", "SolveReport", "SolverConfig", "Status", "eval_objective",
    "validate_config", "Certificate", "CertKind", "RateEstimate", "count_nonzeros",
    "error_bound_check_l1", "estimate_rate", "first_order_check", "second_order_check",
    "InnerConfig", "InnerResult", "fbe_value", "forward_backward_step", "solve_subproblem",
    "BACKEND", "ModelState", "build_model", "model_grad", "model_value", "outer_residual",
    "subproblem_residual", "bb_init", "check_descent", "check_inexact", "estimate_L0",
    "select_next", "solve", "L1Norm", "SimplexIndicator", "ZeroFunction", "moreau_envelope",
    "project_simplex", "prox_l1",
]
