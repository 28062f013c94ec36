"""Hard-edge gap probabilities for products of complex Ginibre matrices.

Three mutually validating routes to the same quantity: Fredholm
determinants of the limiting kernel (Nystrom discretization), a nonlinear
ODE system in the interval endpoint, and direct Monte Carlo over matrix
products.  The package also exposes the integrable structure behind the
determinant: Hamiltonians, Poisson brackets, rank-one Lax matrices, and
their deformation equations, each backed by a numerical residual checker.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .errors import DomainError, EvaluationError
from .params import IntervalUnion, ModelParams, single_interval

__all__ = [
    "BACKEND",
    "DomainError",
    "EvaluationError",
    "IntervalUnion",
    "ModelParams",
    "single_interval",
    "__version__",
]
