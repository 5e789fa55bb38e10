"""Pruning, averaging and trotterization error bounds, with empirical checks."""

from .approximations import (
    AveragingBoundPreconditionError,
    BoundReport,
    PrunedCoefficients,
    averaging_bound,
    averaging_frobenius_bound,
    product_norm_bound,
    prune,
    pruning_bound,
    trotter_leading,
)
from .empirical import (
    BoundCheck,
    EmpiricalBoundCheck,
    empirical_bound_check,
    random_channels,
    random_schedule,
    sample_bound_checks,
)

__all__ = [
    "AveragingBoundPreconditionError",
    "BoundCheck",
    "BoundReport",
    "EmpiricalBoundCheck",
    "PrunedCoefficients",
    "averaging_bound",
    "averaging_frobenius_bound",
    "empirical_bound_check",
    "product_norm_bound",
    "prune",
    "pruning_bound",
    "random_channels",
    "random_schedule",
    "sample_bound_checks",
    "trotter_leading",
]
