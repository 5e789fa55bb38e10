"""Penalty-matrix metrics and clean/noisy path costs."""

from .base import PenaltyFamily, PenaltyMatrix, build_penalty
from .cost import (
    NoisyCostComparison,
    channel_expansions,
    compare_noisy_costs,
    metric_cost_clean,
    metric_cost_noisy_closed_form,
    metric_cost_noisy_oracle,
    operator_complexity,
    path_length,
    pauli_directions,
    segment_coefficients,
    step_costs,
    with_step_costs,
)
from .directional import SingleQubitZZ, TwoQubitWeight2
from .registry import METRIC_KINDS, metric_kind
from .weight import Binomial, Cliff, Exponential, Killing, WeightPenalty

__all__ = [
    "Binomial",
    "Cliff",
    "Exponential",
    "Killing",
    "METRIC_KINDS",
    "NoisyCostComparison",
    "PenaltyFamily",
    "PenaltyMatrix",
    "SingleQubitZZ",
    "TwoQubitWeight2",
    "WeightPenalty",
    "build_penalty",
    "channel_expansions",
    "compare_noisy_costs",
    "metric_cost_clean",
    "metric_cost_noisy_closed_form",
    "metric_cost_noisy_oracle",
    "metric_kind",
    "operator_complexity",
    "path_length",
    "pauli_directions",
    "segment_coefficients",
    "step_costs",
    "with_step_costs",
]
