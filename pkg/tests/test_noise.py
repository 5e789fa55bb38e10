from __future__ import annotations

import json

import numpy as np
import pytest
from scipy import stats

from qctl.noise import (
    NoiseParams,
    NoiseRealization,
    ScenarioSet,
    alpha_at,
    build_scenarios,
    error_measure,
    sample_realization,
    satisfies_error_measure,
)


def test_noise_params_validate_rates() -> None:
    with pytest.raises(ValueError, match="lambda_e"):
        NoiseParams(-1.0, 1.0)
    with pytest.raises(ValueError, match="lambda_c"):
        NoiseParams(1.0, np.nan)
    assert NoiseParams(0.0, 5.0).noise_free
    assert NoiseParams(2.0, 1.0).errors_clear_slower()


def test_alpha_is_right_continuous() -> None:
    r = NoiseRealization([[0.5, 1.0]], 2.0)

    assert alpha_at(r, 0, 0.0) == 1
    assert alpha_at(r, 0, 0.4999) == 1
    assert alpha_at(r, 0, 0.5) == 0
    assert alpha_at(r, 0, 0.75) == 0
    assert alpha_at(r, 0, 1.0) == 1
    assert r.alpha_at(0, 2.0) == 1


def test_alpha_rejects_time_outside_horizon() -> None:
    r = NoiseRealization([[]], 1.0)

    with pytest.raises(ValueError, match="outside"):
        alpha_at(r, 0, 1.5)


def test_realization_rejects_unsorted_jumps() -> None:
    with pytest.raises(ValueError, match="strictly increasing"):
        NoiseRealization([[0.3, 0.2]], 1.0)
    with pytest.raises(ValueError, match="outside"):
        NoiseRealization([[1.2]], 1.0)


def test_error_measure_sums_error_intervals() -> None:
    r = NoiseRealization([[0.2, 0.5, 0.9]], 1.0)

    assert error_measure(r, 0, 1.0) == pytest.approx(0.3 + 0.1)
    assert error_measure(r, 0, 0.4) == pytest.approx(0.2)
    assert r.error_measure(0, 0.1) == 0.0


def test_error_measure_constraint_filter() -> None:
    r = NoiseRealization([[0.2, 0.5], []], 1.0)

    assert satisfies_error_measure(r, 1.0, 0.25, require="any")
    assert not satisfies_error_measure(r, 1.0, 0.25, require="all")
    with pytest.raises(ValueError, match="require"):
        satisfies_error_measure(r, 1.0, 0.25, require="most")


def test_zero_onset_rate_never_jumps() -> None:
    rng = np.random.default_rng(0)

    r = sample_realization(NoiseParams(0.0, 10.0), 5.0, 3, rng)

    assert all(len(j) == 0 for j in r.channel_jumps)


def test_zero_clearing_rate_is_absorbing() -> None:
    rng = np.random.default_rng(1)
    for _ in range(50):
        r = sample_realization(NoiseParams(5.0, 0.0), 10.0, 1, rng)
        assert len(r.channel_jumps[0]) <= 1


def test_error_measure_is_monotone_and_bounded() -> None:
    rng = np.random.default_rng(31)
    times = np.linspace(0.0, 4.0, 81)

    for _ in range(50):
        r = sample_realization(NoiseParams(2.0, 3.0), 4.0, 2, rng)
        for j in range(2):
            measures = np.array([error_measure(r, j, t) for t in times])
            assert np.all(np.diff(measures) >= -1e-15)
            assert np.all(measures <= times + 1e-15)


def test_absorbing_error_mean_jump_count() -> None:
    rng = np.random.default_rng(32)
    samples = 100_000
    params = NoiseParams(0.8, 0.0)

    jumps = np.array(
        [len(sample_realization(params, 1.5, 1, rng).channel_jumps[0]) for _ in range(samples)]
    )

    expected = 1.0 - np.exp(-0.8 * 1.5)
    standard_error = np.sqrt(expected * (1.0 - expected) / samples)
    assert abs(jumps.mean() - expected) <= 3.0 * standard_error


def test_no_jump_probability_matches_exponential_survival() -> None:
    rng = np.random.default_rng(2024)
    samples = 100_000
    params = NoiseParams(1.0, 10.0)

    survived = sum(
        len(sample_realization(params, 0.5, 1, rng).channel_jumps[0]) == 0
        for _ in range(samples)
    )

    expected = np.exp(-0.5)
    standard_error = np.sqrt(expected * (1.0 - expected) / samples)
    assert abs(survived / samples - expected) <= 3.0 * standard_error


def test_equal_rates_give_poisson_jump_counts() -> None:
    rng = np.random.default_rng(9)
    samples = 20_000
    params = NoiseParams(2.0, 2.0)

    counts = np.array(
        [len(sample_realization(params, 1.0, 1, rng).channel_jumps[0]) for _ in range(samples)]
    )

    for k in range(4):
        expected = stats.poisson.pmf(k, 2.0)
        standard_error = np.sqrt(expected * (1.0 - expected) / samples)
        assert abs(np.mean(counts == k) - expected) <= 4.0 * standard_error


def test_scenarios_are_reproducible_and_independent_of_order() -> None:
    params = NoiseParams(1.0, 10.0)

    first = build_scenarios(params, 4.0, 2, L=16, seed=7)
    second = build_scenarios(params, 4.0, 2, L=16, seed=7)
    other = build_scenarios(params, 4.0, 2, L=16, seed=8)

    assert list(first) == list(second)
    assert list(first) != list(other)
    # Realization l does not depend on how many scenarios were drawn.
    assert build_scenarios(params, 4.0, 2, L=4, seed=7)[3] == first[3]


def test_reordered_scenario_set_keeps_realizations() -> None:
    scenarios = build_scenarios(NoiseParams(1.0, 10.0), 2.0, 1, L=5, seed=3)

    reordered = scenarios.reordered([4, 3, 2, 1, 0])

    assert reordered[0] == scenarios[4]
    assert len(reordered) == 5


def test_build_scenarios_validates_arguments() -> None:
    params = NoiseParams(1.0, 1.0)

    with pytest.raises(ValueError, match="L must be"):
        build_scenarios(params, 1.0, 1, L=0, seed=0)
    with pytest.raises(ValueError, match="seed"):
        build_scenarios(params, 1.0, 1, L=1, seed=-1)
    with pytest.raises(ValueError, match="horizon"):
        build_scenarios(params, 0.0, 1, L=1, seed=0)


def test_fast_clearing_rates_are_flagged(caplog: pytest.LogCaptureFixture) -> None:
    build_scenarios(NoiseParams(10.0, 1.0), 1.0, 1, L=2, seed=0)
    assert "not below" not in caplog.text

    build_scenarios(NoiseParams(1.0, 10.0), 1.0, 1, L=2, seed=0)
    assert "lambda_c=10 is not below lambda_e=1" in caplog.text


def test_scenario_set_json_round_trip() -> None:
    scenarios = build_scenarios(NoiseParams(1.0, 10.0), 3.0, 2, L=6, seed=5)

    restored = ScenarioSet.from_json(scenarios.to_json())

    assert list(restored) == list(scenarios)
    assert restored.seed == 5
    assert json.loads(scenarios.to_json())["lambda_c"] == 10.0


def test_filter_by_error_measure() -> None:
    scenarios = build_scenarios(NoiseParams(1.0, 1.0), 5.0, 1, L=50, seed=1)

    kept = scenarios.filter_by_error_measure(0.5)

    assert 0 < len(kept) <= len(scenarios)
    assert all(error_measure(r, 0, 5.0) >= 0.5 for r in kept)


def test_realization_dict_round_trip() -> None:
    r = NoiseRealization([[0.1, 0.2], [0.3]], 1.0)

    payload = r.to_dict()

    assert payload["channels"]["1"] == [0.3]
    assert NoiseRealization.from_dict(payload) == r


def test_filter_with_no_qualifying_realization() -> None:
    scenarios = build_scenarios(NoiseParams(1.0, 1.0), 2.0, 1, L=5, seed=1)

    with pytest.raises(ValueError, match="no realization has error time >= 3.0"):
        scenarios.filter_by_error_measure(3.0)
