"""Periodic event-triggered cooperative output regulation of linear multi-agent systems."""

from .errors import (
    DivergenceError,
    InfeasibleParametersError,
    InvalidInputError,
    NoSolutionError,
    PetregError,
    PreconditionError,
    ScenarioError,
)
from .scenario import bundled_path, load_scenario
from .sim import compute_metrics, run_scenario

__all__ = [
    "DivergenceError",
    "InfeasibleParametersError",
    "InvalidInputError",
    "NoSolutionError",
    "PetregError",
    "PreconditionError",
    "ScenarioError",
    "bundled_path",
    "compute_metrics",
    "load_scenario",
    "run_scenario",
]

__version__ = "0.1.0"
