"""Numerical toolkit for planar sigma-harmonic maps: solvers, distortion fields and A_p/BMO estimators."""

from .cases import CASES, CaseBundle, make_case
from .coeff import EllipticityError, SigmaField, make_sigma_field, validate_sigma
from .conjugate import beltrami_coefficients, qc_bound_K, stream_function
from .dilatation import dilatation_fields, drift
from .mesh import Grid, MatrixField, ScalarField, VectorField, build_grid
from .solve import MapField, solve_cell_problem, solve_dirichlet, weak_residual

__all__ = [
    "CASES", "CaseBundle", "make_case", "EllipticityError", "SigmaField", "make_sigma_field",
    "validate_sigma", "beltrami_coefficients", "qc_bound_K", "stream_function",
    "dilatation_fields", "drift", "Grid", "MatrixField", "ScalarField", "VectorField",
    "build_grid", "MapField", "solve_cell_problem", "solve_dirichlet", "weak_residual",
]
