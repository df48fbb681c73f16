"""Agent-based simulation of ground handling at a disaster-relief airport."""

from .config import PRESETS, FleetConfig, ParameterSet, SimConfig, preset
from .engine import Simulation, run_simulation

__version__ = "0.1.0"

__all__ = ["PRESETS", "FleetConfig", "ParameterSet", "SimConfig", "preset", "Simulation",
           "run_simulation", "__version__"]
