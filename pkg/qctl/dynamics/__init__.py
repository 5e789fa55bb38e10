"""Noise-switched Schroedinger dynamics, hitting times and chance estimates."""

from .engine import (
    ChanceEstimate,
    StatePath,
    Trajectory,
    apply_to_state,
    chance_estimate,
    first_hit_index,
    hitting_time,
    propagate,
    propagate_segments,
    scenario_hitting_times,
)
from .schedule import (
    ControlSchedule,
    HamiltonianSet,
    Segments,
    effective_hamiltonian,
    effective_hamiltonians,
    segments,
)

__all__ = [
    "ChanceEstimate",
    "ControlSchedule",
    "HamiltonianSet",
    "Segments",
    "StatePath",
    "Trajectory",
    "apply_to_state",
    "chance_estimate",
    "effective_hamiltonian",
    "effective_hamiltonians",
    "first_hit_index",
    "hitting_time",
    "propagate",
    "propagate_segments",
    "scenario_hitting_times",
    "segments",
]
