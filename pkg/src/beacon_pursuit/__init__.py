"""Beacon-referenced cyclic pursuit: steering law, shape dynamics, equilibria, stability, simulation."""
from .equilibria import EquilibriumSpec, classify_two_agent, enumerate_equilibria, two_agent_row
from .errors import (AssumptionViolation, BeaconPursuitError, ConfigError, DegenerateFamily, DegenerateGeometry,
                     IllConditioned, InconsistentShape, NoSuchEquilibrium)
from .frenet import AgentState, ControlParams, WorldState, control_all, control_cartesian, extract_shape, wrap
from .shape import ShapeState, closure_residual, control_shape, reconstruct_world, shape_derivative
from .simkit import BeaconMove, HeadingKick, SimConfig, Trajectory, convergence_metrics, integrate
from .stability import StabilityReport, analyze, char_poly_two_agent, numeric_eigenvalues, routh_classify

__version__ = "0.1.0"

__all__ = [
    "AgentState", "AssumptionViolation", "BeaconMove", "BeaconPursuitError", "ConfigError", "ControlParams",
    "DegenerateFamily", "DegenerateGeometry", "EquilibriumSpec", "HeadingKick", "IllConditioned",
    "InconsistentShape", "NoSuchEquilibrium", "ShapeState", "SimConfig", "StabilityReport", "Trajectory",
    "WorldState", "analyze", "char_poly_two_agent", "classify_two_agent", "closure_residual", "control_all",
    "control_cartesian", "control_shape", "convergence_metrics", "enumerate_equilibria", "extract_shape",
    "integrate", "numeric_eigenvalues", "reconstruct_world", "routh_classify", "shape_derivative",
    "two_agent_row", "wrap",
]
