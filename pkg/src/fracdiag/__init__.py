"""Exact-diagonalization solver for the spectral fractional Laplacian.

Solves ``(-Laplacian)^s u = f`` with homogeneous Dirichlet data on the unit
interval, the unit square and an L-shaped domain. The extension problem is
diagonalised in closed form (Bessel-zero nodes), which turns the solve into
``K`` independent shifted elliptic problems.
"""

__version__ = "0.1.0"

from .exceptions import (
    BracketingError,
    ConvergenceError,
    DataError,
    DomainError,
    FracdiagError,
    ResourceError,
    ValidationError,
)
from .fem import (
    Domain,
    FemSystem,
    Mesh,
    assemble,
    build_mesh,
    dense_generalized_eigs,
    l2_error,
    project_load,
    shifted_solve,
)
from .oracles import SineSeries, discrete_fractional_oracle, spectral_solution
from .quadrature import (
    FractionalOrder,
    QuadratureRule,
    apply_rule,
    build_rule,
    choose_parameters,
    exact_integral,
    f_lambda,
    make_order,
    tanh_closed_form,
)
from .solver import (
    FractionalLaplacianSolver,
    SolveResult,
    SolverConfig,
    solve,
    trace_coefficient_check,
)
from .special import BesselOrder, ZeroTable, bessel_j, bessel_zeros, gamma

__all__ = [
    "BesselOrder", "BracketingError", "ConvergenceError", "DataError", "Domain",
    "DomainError", "FemSystem", "FracdiagError", "FractionalLaplacianSolver",
    "FractionalOrder", "Mesh", "QuadratureRule", "ResourceError", "SineSeries",
    "SolveResult", "SolverConfig", "ValidationError", "ZeroTable", "apply_rule",
    "assemble", "bessel_j", "bessel_zeros", "build_mesh", "build_rule",
    "choose_parameters", "dense_generalized_eigs", "discrete_fractional_oracle",
    "exact_integral", "f_lambda", "gamma", "l2_error", "make_order", "project_load",
    "shifted_solve", "solve", "spectral_solution", "tanh_closed_form",
    "trace_coefficient_check",
]
