"""Schrodinger equation on an interval with one moving Dirichlet wall.

Energy identities, boundary and interior observability, and duality with
control, computed on the fixed domain y = x / l(t) and on the exact series
available for a linearly moving wall.
"""

from .control import ControlSolution, adjoint_stamp, duality_residual, steer
from .curves import BoundaryCurve, WindowReport, check_observability_window, linear_tau_max
from .energy import EnergyTrace, energies
from .errors import (
    ConfigError,
    DomainError,
    InterpolationError,
    MovingWallError,
    NonObservableError,
    ResolutionError,
    SolverError,
    ValidationError,
)
from .exact import ExactSolution
from .observability import GramianMatrix, MultiplierFunction, boundary_gramian, point_gramian
from .pde import Trajectory, assemble_operator, solve
from .spectral import SineSpectrum, project_initial

__version__ = "0.1.0"

__all__ = [
    "BoundaryCurve", "WindowReport", "check_observability_window", "linear_tau_max",
    "SineSpectrum", "project_initial",
    "ExactSolution",
    "Trajectory", "assemble_operator", "solve",
    "EnergyTrace", "energies",
    "MultiplierFunction", "GramianMatrix", "boundary_gramian", "point_gramian",
    "ControlSolution", "adjoint_stamp", "duality_residual", "steer",
    "MovingWallError", "DomainError", "InterpolationError", "ResolutionError", "SolverError",
    "ValidationError", "NonObservableError", "ConfigError",
]
