"""Fully spectral solver for the 1D steady-state neutron transport equation.

Spatial discretization is a modal Legendre (Petrov-)Galerkin method; the
angular variable is collocated at Gauss-Legendre nodes with the matching
quadrature replacing the scattering integral. Single- and multi-domain
meshes, a direct and an iterative solver, and a convergence-study harness
are provided, plus a CLI (``spectral-transport``).
"""

from .assembly import ConfigurationError, GlobalSystem, Mesh, assemble, mask_indices, reduce_system
from .analysis import (
    ConvergenceTable,
    angular_l2_error,
    boundary_error,
    convergence_study,
    fit_order,
    flux_l2_error,
)
from .basis import BasisSet, Element, basis_deriv, basis_eval, bhat_matrix, load_vector, weighted_mass_matrix
from .orthopoly import (
    QuadratureRule,
    gauss_rule,
    interpolate_at_nodes,
    legendre_deriv,
    legendre_eval,
    quad_integrate,
)
from .problem import Coefficient, ProblemSpec, catalog, inflow_values, load_problem
from .solve import (
    IterationFailureError,
    SingularMatrixError,
    Solution,
    eval_angular_flux,
    lu_solve,
    scalar_flux,
    solve_direct,
    solve_source_iteration,
)

__all__ = [
    "BasisSet", "Coefficient", "ConfigurationError", "ConvergenceTable", "Element",
    "GlobalSystem", "IterationFailureError", "Mesh", "ProblemSpec", "QuadratureRule",
    "SingularMatrixError", "Solution", "angular_l2_error", "assemble", "basis_deriv",
    "basis_eval", "bhat_matrix", "boundary_error", "catalog", "convergence_study",
    "eval_angular_flux", "fit_order", "flux_l2_error", "gauss_rule", "inflow_values",
    "interpolate_at_nodes", "legendre_deriv", "legendre_eval", "load_problem",
    "load_vector", "lu_solve", "mask_indices", "quad_integrate", "reduce_system",
    "scalar_flux", "solve_direct", "solve_source_iteration", "weighted_mass_matrix",
]

__version__ = "0.1.0"
