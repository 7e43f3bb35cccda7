"""Solvers for the discrete L_p Minkowski problem in two and three dimensions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AdmissionError,
    ClosureViolated,
    ConvergenceError,
    EmptyError,
    FacetCollapse,
    MaxIterations,
    MinkowskiError,
    OriginNotInterior,
    UnboundedError,
)
from .measure import DiscreteMeasure, check_closure, check_hemisphere, residual, sp_measure  # noqa: E402
from .outer import SolverOptions, SolveReport, solve, solve_p_ge_one, solve_sub_one  # noqa: E402
from .polytope import DirectionSet, PolytopeMesh, intersect_halfspaces  # noqa: E402

__all__ = [
    "AdmissionError",
    "ClosureViolated",
    "ConvergenceError",
    "DirectionSet",
    "DiscreteMeasure",
    "EmptyError",
    "FacetCollapse",
    "MaxIterations",
    "MinkowskiError",
    "OriginNotInterior",
    "PolytopeMesh",
    "SolveReport",
    "SolverOptions",
    "UnboundedError",
    "check_closure",
    "check_hemisphere",
    "intersect_halfspaces",
    "residual",
    "solve",
    "solve_p_ge_one",
    "solve_sub_one",
    "sp_measure",
]
