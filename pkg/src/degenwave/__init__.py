"""Numerical lab for two coupled degenerate strings with boundary damping."""

from .assembly import (
    ConfigurationError,
    OperatorMatrices,
    StateVector,
    Variant,
    apply_generator,
    assemble,
    energy,
    energy_inner,
    energy_norm,
)
from .coeff import DegeneracyProfile, DomainError, left_coefficient, right_coefficient
from .mesh import CoupledMesh, StringMesh, build_coupled_mesh, build_graded_mesh
from .spectral import resolvent_norm, resolvent_peaks, resolvent_sweep, spectrum
from .statics import StaticData, analytic_static, solve_static
from .timestep import EnergySeries, simulate, step_trapezoidal

__all__ = [
    "ConfigurationError",
    "CoupledMesh",
    "DegeneracyProfile",
    "DomainError",
    "EnergySeries",
    "OperatorMatrices",
    "StateVector",
    "StaticData",
    "StringMesh",
    "Variant",
    "analytic_static",
    "apply_generator",
    "assemble",
    "build_coupled_mesh",
    "build_graded_mesh",
    "energy",
    "energy_inner",
    "energy_norm",
    "left_coefficient",
    "resolvent_norm",
    "resolvent_peaks",
    "resolvent_sweep",
    "right_coefficient",
    "simulate",
    "solve_static",
    "spectrum",
    "step_trapezoidal",
]
