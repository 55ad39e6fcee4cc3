"""Benchmark problem families: logistic, Student's t and MVSK portfolio."""

from .io import parse_libsvm, read_returns_csv, write_libsvm, write_returns_csv
from .logistic import LogisticLoss, gen_logistic_instance, logistic_oracle
from .mvsk import (MVSKObjective, PAPER_WEIGHTS, log_returns, mvsk_oracle, sample_moments,
                   synthetic_prices)
from .operators import MatrixOperator, PartialDCT, dct_apply, dct_matrix
from .student_t import (StudentTInstance, StudentTLoss, StudentTParams, gen_student_t_instance,
                        student_t_oracle)

__all__ = [
    "LogisticLoss", "logistic_oracle", "gen_logistic_instance", "StudentTLoss", "student_t_oracle",
    "StudentTParams", "StudentTInstance", "gen_student_t_instance",
    "MVSKObjective", "mvsk_oracle", "sample_moments", "synthetic_prices", "log_returns",
    "PAPER_WEIGHTS", "MatrixOperator", "PartialDCT", "dct_apply", "dct_matrix",
    "parse_libsvm", "write_libsvm", "read_returns_csv", "write_returns_csv",
]
