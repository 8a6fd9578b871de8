"""Numerical study of nonlinear power operators L_lam(f, x) = sum_m int f^m K_{lam,m}(x, t) dt."""
from .errors import (ArgumentError, CatalogError, ConfigError, DomainError, IntegrationError,
                     NonIntegrableError, NonlinopError, OperatorEvaluationError, ReportError)
from .kernels import DomainSpec, KernelFamily, eval_kernel, kernel_mass, make_builtin_family
from .lebesgue import (LebesgueScan, TestFunction, builtin_function, classify_point,
                       one_sided_average, profile_F, profile_G)
from .operator import (DecompositionReport, OperatorSpec, apply_operator, approximation_error,
                       limit_target, lipschitz_power_bound, proof_decomposition)
from .quadrature import QuadResult, integrate_finite, integrate_real_line
from .validator import ValidationReport, check_tail_conditions, validate_class_a

__version__ = "0.1.0"
