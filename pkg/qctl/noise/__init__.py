"""Bang-bang Poisson gate-error process and scenario sets."""

from .process import (
    NoiseParams,
    NoiseRealization,
    alpha_at,
    error_measure,
    sample_realization,
    satisfies_error_measure,
)
from .scenarios import ScenarioSet, build_scenarios, scenario_rng

__all__ = [
    "NoiseParams",
    "NoiseRealization",
    "ScenarioSet",
    "alpha_at",
    "build_scenarios",
    "error_measure",
    "sample_realization",
    "satisfies_error_measure",
    "scenario_rng",
]
