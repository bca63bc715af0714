"""Numerical laboratory for finite-time extinction of fast diffusion flows."""

from .problem import (
    ProblemSpec,
    bubble_profile,
    critical_marcinkiewicz_exponent,
    derive_coefficients,
    singular_barenblatt,
    sphere_area,
    stationary_constant,
)
from .geometry import Grid, assemble_operator, build_grid, integrate, periodic_line, polar_arc, tensor_grid
from .flow import Field, FlowConfig, StopRule, TrajectoryRecord, estimate_extinction_time, run, step_implicit
from .transform import from_cylindrical, rescale_field, rescale_time, to_cylindrical, unrescale_time

__all__ = [
    "ProblemSpec", "bubble_profile", "critical_marcinkiewicz_exponent",
    "derive_coefficients", "singular_barenblatt", "sphere_area", "stationary_constant",
    "Grid", "assemble_operator", "build_grid", "integrate", "periodic_line",
    "polar_arc", "tensor_grid",
    "Field", "FlowConfig", "StopRule", "TrajectoryRecord",
    "estimate_extinction_time", "run", "step_implicit",
    "from_cylindrical", "rescale_field", "rescale_time", "to_cylindrical", "unrescale_time",
]

__version__ = "0.1.0"
