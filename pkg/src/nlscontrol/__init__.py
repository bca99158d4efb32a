"""Bilinear optimal control of nonlinear Schrödinger equations with singular potentials."""

__version__ = "0.1.0"

from .control import AdmissibilityBounds, ControlPath, make_control  # noqa: E402
from .forward import Trajectory, evolve  # noqa: E402
from .grid import Grid, State, make_grid  # noqa: E402
from .model import ModelParams, ObservableSpec, PotentialSpec, validate_model  # noqa: E402
from .objective import CostBreakdown, CostParams  # noqa: E402
from .optimizer import OptimizeOptions, optimize  # noqa: E402
from .problem import ControlProblem  # noqa: E402

__all__ = [
    "AdmissibilityBounds",
    "ControlPath",
    "ControlProblem",
    "CostBreakdown",
    "CostParams",
    "Grid",
    "ModelParams",
    "ObservableSpec",
    "OptimizeOptions",
    "PotentialSpec",
    "State",
    "Trajectory",
    "evolve",
    "make_control",
    "make_grid",
    "optimize",
    "validate_model",
]
