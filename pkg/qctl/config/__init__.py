"""YAML experiment configuration: schema dataclasses and the validating loader."""

from .loader import ConfigLoader
from .schema import (
    EXPERIMENT_KINDS,
    TARGET_GATES,
    BoundsSection,
    ConfigError,
    ExperimentConfig,
    GridSection,
    HamiltonianSection,
    MetricsSection,
    MetricSection,
    NoiseSection,
    OptimizerSection,
    OutputSection,
    SimulateSection,
    TargetSection,
)

__all__ = [
    "BoundsSection",
    "ConfigError",
    "ConfigLoader",
    "EXPERIMENT_KINDS",
    "ExperimentConfig",
    "GridSection",
    "HamiltonianSection",
    "MetricSection",
    "MetricsSection",
    "NoiseSection",
    "OptimizerSection",
    "OutputSection",
    "SimulateSection",
    "TARGET_GATES",
    "TargetSection",
]
