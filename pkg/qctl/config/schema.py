from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Any

import numpy as np

from qctl.control import OptimizerConfig, RiskMeasure
from qctl.dynamics import HamiltonianSet
from qctl.linalg import UnitaryMatrix
from qctl.metrics import PenaltyFamily, metric_kind
from qctl.noise import NoiseParams
from qctl.pauli import pauli_matrix

EXPERIMENT_KINDS = ("basis", "metrics", "simulate", "optimize", "bounds", "figure2")
TARGET_GATES = ("hadamard", "pauli_x", "identity", "custom")


class ConfigError(ValueError):
    """
    Invalid experiment configuration.

    Attributes:
        field: Dotted path of the offending field, e.g. 'grid.dt'.
        line: 1-based line in the YAML file, when known.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None) -> None:
        self.message = message
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(field)
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass(frozen=True)
class HamiltonianSection:
    """Intended and erroneous channel Hamiltonians as dense matrices."""

    n: int
    clean: tuple[np.ndarray, ...] = field(repr=False)
    noisy: tuple[np.ndarray, ...] = field(repr=False)

    def build(self) -> HamiltonianSet:
        return HamiltonianSet(list(self.clean), list(self.noisy))


@dataclass(frozen=True)
class NoiseSection:
    """Switching rates (per unit time), scenario count L and an on/off switch."""

    lambda_e: float = 0.0
    lambda_c: float = 0.0
    scenarios: int = 1
    enabled: bool = True

    @property
    def params(self) -> NoiseParams:
        if not self.enabled:
            return NoiseParams(0.0, 0.0)
        return NoiseParams(self.lambda_e, self.lambda_c)


@dataclass(frozen=True)
class GridSection:
    """Time grid; times share the unit of 1 / h_max."""

    dt: float
    horizon: float
    h_max: float = 1.0

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class TargetSection:
    gate: str = "identity"
    eta: float = 0.05
    phase_invariant: bool = False
    custom: np.ndarray | None = field(default=None, repr=False)

    def matrix(self, n: int) -> UnitaryMatrix:
        """Named gate on every qubit (tensor power), or the custom matrix."""
        if self.gate == "custom":
            assert self.custom is not None
            return self.custom
        if self.gate == "identity":
            return np.eye(2**n, dtype=np.complex128)
        if self.gate == "hadamard":
            single = (pauli_matrix("x") + pauli_matrix("z")) / np.sqrt(2.0)
        else:
            single = pauli_matrix("x")
        return reduce(np.kron, [single] * n)


@dataclass(frozen=True)
class MetricSection:
    kind: str = "killing"
    params: dict[str, float] = field(default_factory=dict)

    def family(self) -> PenaltyFamily:
        return metric_kind(self.kind, **self.params)


@dataclass(frozen=True)
class OptimizerSection:
    """Problem-level risk settings plus the descent settings."""

    risk: RiskMeasure = RiskMeasure()
    beta: float = 0.0
    penalty_mu: float = 10.0
    settings: OptimizerConfig = OptimizerConfig()


@dataclass(frozen=True)
class BoundsSection:
    """
    Path source and parameters for the bounds experiment.

    With `schedule` the path is read from a schedule CSV; otherwise `paths`
    random noise-free paths are drawn from the run seed.
    """

    cutoff: float = 2.0
    steps: int = 32
    paths: int = 10
    channels: int = 2
    path_steps: int = 8
    schedule: Path | None = None


@dataclass(frozen=True)
class SimulateSection:
    """Schedule source for the simulate experiment: a CSV file or one constant control row."""

    schedule: Path | None = None
    constant: tuple[float, ...] | None = None
    initial_state: str = "0"


@dataclass(frozen=True)
class MetricsSection:
    """Inputs evaluated by the metrics experiment."""

    coefficients: tuple[tuple[float, ...], ...] = ()
    noisy: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...] = ()
    schedule: Path | None = None


@dataclass(frozen=True)
class OutputSection:
    directory: Path = Path("out")


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment description."""

    experiment: str
    seed: int | None
    workers: int
    hamiltonians: HamiltonianSection | None
    noise: NoiseSection
    grid: GridSection | None
    target: TargetSection | None
    metric: MetricSection
    optimizer: OptimizerSection
    bounds: BoundsSection
    simulate: SimulateSection
    metrics: MetricsSection
    output: OutputSection
    n: int = 1
    source: Path | None = None
    raw: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def stochastic(self) -> bool:
        """Whether outputs depend on random draws, which makes `seed` mandatory."""
        if self.experiment in ("optimize", "figure2"):
            return True
        if self.experiment == "simulate":
            return self.noise.enabled and self.noise.lambda_e > 0
        if self.experiment == "bounds":
            return self.bounds.schedule is None
        return False
