"""Robust time-optimal control: risk measures, SAA objective and the optimizer."""

from .objective import ObjectiveComponents, OCPProblem, ScenarioEvaluator, saa_objective
from .optimizer import (
    IterationRecord,
    OptimizationReport,
    OptimizerConfig,
    noise_free_scenarios,
    optimize,
    solve_deterministic,
)
from .risk import RiskMeasure, risk
from .warm_start import (
    geodesic_step_bound,
    geodesic_warm_start,
    nominal_fidelity_gradient,
    nominal_warm_start,
    target_drive,
)

__all__ = [
    "IterationRecord",
    "OCPProblem",
    "ObjectiveComponents",
    "OptimizationReport",
    "OptimizerConfig",
    "RiskMeasure",
    "ScenarioEvaluator",
    "geodesic_step_bound",
    "geodesic_warm_start",
    "noise_free_scenarios",
    "nominal_fidelity_gradient",
    "nominal_warm_start",
    "optimize",
    "risk",
    "saa_objective",
    "solve_deterministic",
    "target_drive",
]
