from __future__ import annotations

from typing import Any

from .base import PenaltyFamily
from .directional import SingleQubitZZ, TwoQubitWeight2
from .weight import Binomial, Cliff, Exponential, Killing

METRIC_KINDS: dict[str, type[PenaltyFamily]] = {
    "killing": Killing,
    "cliff": Cliff,
    "binomial": Binomial,
    "exponential": Exponential,
    "single_qubit_zz": SingleQubitZZ,
    "two_qubit_weight2": TwoQubitWeight2,
}


def metric_kind(tag: str, **params: Any) -> PenaltyFamily:
    """
    Instantiate a family by tag.

    Usage:
        metric_kind("binomial", alpha=1.0)
    """
    key = tag.strip().lower()
    if key not in METRIC_KINDS:
        raise ValueError(f"unknown metric kind {tag!r}; expected one of {sorted(METRIC_KINDS)}")
    try:
        return METRIC_KINDS[key](**params)
    except TypeError as exc:
        raise ValueError(f"invalid parameters for metric {key!r}: {params}") from exc
