"""Numerical solver and property audits for the one-phase space-fractional Stefan problem."""

from .errors import (
    AdmissibilityError,
    ConvergenceError,
    FracStefanError,
    SolverError,
    ValidationError,
)
from .frac_ops import (
    Field,
    Frame,
    Grid,
    FracOpMatrix,
    assemble_caputo,
    assemble_dcaputo,
    assemble_fractional_integral,
    assemble_riemann_liouville,
    caputo_at_point_maxrep,
)
from .transform import (
    FrontPath,
    ICFamily,
    InitialCondition,
    ProblemSpec,
    from_cylindrical,
    stefan_speed_from_cylindrical,
    to_cylindrical,
)
from .given_front import Trajectory, admit_initial_condition, solve_given_front
from .stefan import FixedPointConfig, solve_stefan_marching, solve_stefan_picard

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConvergenceError",
    "FracStefanError",
    "SolverError",
    "ValidationError",
    "Field",
    "Frame",
    "Grid",
    "FracOpMatrix",
    "assemble_caputo",
    "assemble_dcaputo",
    "assemble_fractional_integral",
    "assemble_riemann_liouville",
    "caputo_at_point_maxrep",
    "FrontPath",
    "ICFamily",
    "InitialCondition",
    "ProblemSpec",
    "from_cylindrical",
    "stefan_speed_from_cylindrical",
    "to_cylindrical",
    "Trajectory",
    "admit_initial_condition",
    "solve_given_front",
    "FixedPointConfig",
    "solve_stefan_marching",
    "solve_stefan_picard",
]
