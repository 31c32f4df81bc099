"""Grid pedestrian wayfinding with tactical route choice and entropy maps."""

from .engine import WorldState, init, run, tick
from .entropy import EntropyMap, entropy_map, entropy_of
from .params import ModelParams
from .scenario import Scenario, parse_scenario, validate_scenario

__all__ = [
    "EntropyMap",
    "ModelParams",
    "Scenario",
    "WorldState",
    "entropy_map",
    "entropy_of",
    "init",
    "parse_scenario",
    "run",
    "tick",
    "validate_scenario",
]
