"""Bistable reaction with nonlocal dispersal around obstacles: waves, fronts and blocking."""
from .errors import NonlocFrontError
from .geometry import Domain, Metric, Obstacle, build_grid, geodesic_distance
from .kernel import RadialKernel, lattice_marginal, marginal, normalize
from .nonlinearity import Bistable, validate
from .operator import NonlocalOperator, assemble
from .scenarios import BUILTINS, Scenario, load_scenario, run_scenario
from .solver import CauchyState, SchemeConfig, run, step
from .wave1d import WaveConfig, WaveProfile, characteristic_roots, solve_profile

__version__ = "0.1.0"

__all__ = [
    "BUILTINS", "Bistable", "CauchyState", "Domain", "Metric", "NonlocFrontError", "NonlocalOperator",
    "Obstacle", "RadialKernel", "Scenario", "SchemeConfig", "WaveConfig", "WaveProfile", "assemble",
    "build_grid", "characteristic_roots", "geodesic_distance", "lattice_marginal", "load_scenario", "marginal",
    "normalize", "run", "run_scenario", "solve_profile", "step", "validate",
]
