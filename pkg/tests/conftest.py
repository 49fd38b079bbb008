"""Shared fixtures: bundled config paths and a small synthetic scenario.

The line scenario puts everything on one meridian with a static train so
individual link budgets are hand-checkable: with 11 dBm, 0 dBi ends, and
MCS4 (-82 dBm) the free-space reception threshold sits at 180.6 m.
"""

from __future__ import annotations

import copy
from pathlib import Path

import pytest
import yaml

import railwarn

DATA_DIR = Path(railwarn.__file__).parent / "data"


@pytest.fixture(scope="session")
def demo_path() -> Path:
    return DATA_DIR / "demo_crossing.yaml"


@pytest.fixture(scope="session")
def sweep_path() -> Path:
    return DATA_DIR / "boresight_sweep.yaml"


@pytest.fixture(scope="session")
def demo_dict(demo_path) -> dict:
    return yaml.safe_load(demo_path.read_text())


@pytest.fixture(scope="session")
def sweep_dict(sweep_path) -> dict:
    return yaml.safe_load(sweep_path.read_text())


# Geometry for the line scenario, all on the -105 meridian southbound:
# train parked at the track start, roadside unit 100 m ahead, vehicle
# 250 m ahead (so 150 m past the roadside unit).
_LINE = {
    "name": "line",
    "seed": 3,
    "duration_ms": 1000,
    "timestep_ms": 100,
    "broadcast_period_ms": 100,
    "clear_margin_m": 100.0,
    "reception": "hard",
    "path_loss": {"kind": "free_space"},
    "track": [[39.0, -105.0], [38.99, -105.0]],
    "crossing_arclength_m": 1000.0,
    "roads": [
        [[38.99784163112705, -105.0], [38.99766176705431, -105.0]],  # 240..260 m
    ],
    "train": {
        "id": "train",
        "initial_arclength_m": 0.0,
        "speed_mps": 0.0,
        "radio": {"power_class": "private", "mcs": "MCS4"},
        "antenna": {"kind": "omni", "gain_dbi": 0.0},
    },
    "rsu": {
        "id": "rsu",
        "position": [38.99910067963627, -105.0],  # 100 m along the track
        "relay_enabled": True,
        "radio": {"power_class": "private", "mcs": "MCS4"},
        "antenna": {"kind": "omni", "gain_dbi": 0.0},
    },
    "obus": [
        {
            "id": "obu",
            "road_index": 0,
            "initial_arclength_m": 10.0,  # 250 m from the train
            "speed_mps": 0.0,
            "radio": {"power_class": "private", "mcs": "MCS4"},
            "antenna": {"kind": "omni", "gain_dbi": 0.0},
        }
    ],
}


@pytest.fixture
def line_dict():
    """Deep copy of the hand-checkable line scenario, safe to mutate."""
    return copy.deepcopy(_LINE)
