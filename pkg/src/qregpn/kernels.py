"""Kernel backend selection.

The compiled extension is preferred; set ``QREG_PURE=1`` to force the NumPy
fallback (useful for benchmarking and for platforms without a compiler).
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QREG_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py

soft_threshold = _impl.soft_threshold
project_simplex = _impl.project_simplex
logistic_terms = _impl.logistic_terms
student_t_terms = _impl.student_t_terms

__all__ = ["BACKEND", "soft_threshold", "project_simplex",
           "logistic_terms", "student_t_terms"]
