"""Distributional solutions of first-kind integral equations with rational kernels.

Solves ``R h = f`` on ``[0, L]`` where the kernel satisfies ``Q R = P delta``
for even-order differential operators ``Q`` and ``P``. The solution is a
regular function on ``(0, L)`` plus delta layers of order below
``(n - m) / 2`` at both endpoints.
"""

from ._ext import BACKEND
from .errors import (
    DistSolveError,
    ExpressionParseError,
    NumericalError,
    ValidationError,
)
from .expression import SmoothExpression
from .green import CausalGreen, build_causal_green, delta_response_decomposition
from .operators import (
    DifferentialOperator,
    ProblemSpec,
    apply_operator,
    characteristic_roots,
    dichotomy_check,
)
from .oracle import (
    RationalKernel,
    apply_kernel,
    kernel_from_symbol,
    nystrom_solve,
    perturbation_sweep,
    residual,
    richardson_interior,
)
from .parsing import parse_expression
from .solver import DistributionalSolution, solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CausalGreen",
    "DifferentialOperator",
    "DistSolveError",
    "DistributionalSolution",
    "ExpressionParseError",
    "NumericalError",
    "ProblemSpec",
    "RationalKernel",
    "SmoothExpression",
    "ValidationError",
    "apply_kernel",
    "apply_operator",
    "build_causal_green",
    "characteristic_roots",
    "delta_response_decomposition",
    "dichotomy_check",
    "kernel_from_symbol",
    "nystrom_solve",
    "parse_expression",
    "perturbation_sweep",
    "residual",
    "richardson_interior",
    "solve",
]
