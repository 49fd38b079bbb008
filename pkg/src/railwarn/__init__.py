"""Packet-level simulator and log-replay analyzer for a DSRC railroad
grade-crossing warning system: a train-mounted transmitter, a relaying
roadside unit at the crossing, and vehicle receivers on nearby roads.
"""

__version__ = "0.1.0"

from .exceptions import (
    EmptyLogError,
    RailwarnError,
    ScenarioError,
    ValidationIssue,
)
from .scenario import Scenario, load_scenario, scenario_from_dict, scenario_hash
from .sim import PacketFate, Reception, SimLog, compute_stats, run

__all__ = [
    "EmptyLogError",
    "PacketFate",
    "RailwarnError",
    "Reception",
    "Scenario",
    "ScenarioError",
    "SimLog",
    "ValidationIssue",
    "compute_stats",
    "load_scenario",
    "run",
    "scenario_from_dict",
    "scenario_hash",
    "__version__",
]
