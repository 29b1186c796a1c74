"""Corridor clearance simulator, controllers and experiment harness."""

__version__ = "0.1.0"

from .scenario import NetworkKind, ScenarioSpec
from .shockwave import ShockwaveParams, analytic_times, optimal_split

__all__ = ["NetworkKind", "ScenarioSpec", "ShockwaveParams",
           "analytic_times", "optimal_split", "__version__"]
