from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

RISK_KINDS = ("expectation", "cvar")


@dataclass(frozen=True)
class RiskMeasure:
    """
    Aggregation of scenario hitting times into one number.

    `expectation` is the sample mean. `cvar` with level gamma is the mean of
    the worst (largest) ceil(gamma * L) values; cvar(1) is the mean.
    """

    kind: str = "expectation"
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in RISK_KINDS:
            raise ValueError(f"risk kind must be one of {RISK_KINDS}, got {self.kind!r}")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("cvar gamma must be in (0, 1]")
        if self.kind == "expectation" and self.gamma != 1.0:
            raise ValueError("gamma applies to cvar only")

    @classmethod
    def expectation(cls) -> RiskMeasure:
        return cls("expectation")

    @classmethod
    def cvar(cls, gamma: float) -> RiskMeasure:
        return cls("cvar", float(gamma))

    @property
    def label(self) -> str:
        return "expectation" if self.kind == "expectation" else f"cvar({self.gamma:g})"

    def tail_size(self, count: int) -> int:
        """Number of largest values averaged out of `count`."""
        if self.kind == "expectation":
            return count
        # Guard against gamma * L landing a hair above an integer.
        return max(1, min(count, math.ceil(self.gamma * count - 1e-9)))


def risk(values: Sequence[float] | np.ndarray, measure: RiskMeasure) -> float:
    """Evaluate a risk measure on a non-empty list of values."""
    data = np.asarray(values, dtype=float).reshape(-1)
    if data.size == 0:
        raise ValueError("risk needs at least one value")
    if measure.kind == "expectation":
        return float(np.mean(data))
    tail = np.sort(data)[::-1][: measure.tail_size(data.size)]
    return float(np.mean(tail))
