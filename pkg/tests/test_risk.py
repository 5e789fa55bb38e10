from __future__ import annotations

import numpy as np
import pytest

from qctl.control import RiskMeasure, risk


def test_expectation_is_sample_mean() -> None:
    assert risk([1.0, 2.0, 6.0], RiskMeasure.expectation()) == pytest.approx(3.0)


def test_cvar_averages_worst_tail() -> None:
    values = [1.0, 5.0, 2.0, 4.0, 3.0, 6.0, 0.5, 2.5]

    assert risk(values, RiskMeasure.cvar(0.25)) == pytest.approx((6.0 + 5.0) / 2)
    assert risk(values, RiskMeasure.cvar(0.1)) == pytest.approx(6.0)


def test_cvar_one_equals_expectation() -> None:
    rng = np.random.default_rng(0)
    values = rng.exponential(size=37)

    assert risk(values, RiskMeasure.cvar(1.0)) == pytest.approx(
        risk(values, RiskMeasure.expectation())
    )


def test_cvar_is_monotone_in_gamma() -> None:
    rng = np.random.default_rng(1)
    values = rng.normal(size=200)

    levels = [risk(values, RiskMeasure.cvar(g)) for g in (0.05, 0.25, 0.5, 1.0)]

    assert levels == sorted(levels, reverse=True)


def test_tail_size_rounds_up() -> None:
    assert RiskMeasure.cvar(0.25).tail_size(512) == 128
    assert RiskMeasure.cvar(0.3).tail_size(10) == 3
    assert RiskMeasure.cvar(0.01).tail_size(10) == 1
    assert RiskMeasure.expectation().tail_size(7) == 7


def test_labels() -> None:
    assert RiskMeasure.expectation().label == "expectation"
    assert RiskMeasure.cvar(0.25).label == "cvar(0.25)"


@pytest.mark.parametrize(
    ("kind", "gamma", "message"),
    [
        ("median", 1.0, "risk kind"),
        ("cvar", 0.0, "gamma must be in"),
        ("cvar", 1.5, "gamma must be in"),
        ("expectation", 0.5, "cvar only"),
    ],
)
def test_invalid_measures(kind: str, gamma: float, message: str) -> None:
    with pytest.raises(ValueError, match=message):
        RiskMeasure(kind, gamma)


def test_risk_rejects_empty_values() -> None:
    with pytest.raises(ValueError, match="at least one"):
        risk([], RiskMeasure.expectation())
