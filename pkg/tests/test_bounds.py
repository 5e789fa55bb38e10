from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest

from qctl.bounds import (
    AveragingBoundPreconditionError,
    averaging_bound,
    averaging_frobenius_bound,
    empirical_bound_check,
    product_norm_bound,
    prune,
    pruning_bound,
    random_channels,
    random_schedule,
    sample_bound_checks,
    trotter_leading,
)
from qctl.dynamics import ControlSchedule, HamiltonianSet
from qctl.linalg import frobenius_norm, operator_norm, random_hermitian
from qctl.metrics import Cliff, Exponential, Killing, build_penalty, metric_cost_clean
from qctl.pauli import PauliBasis, pauli_matrix

SX = pauli_matrix("x")
SY = pauli_matrix("y")
SZ = pauli_matrix("z")


def test_averaging_bound_value() -> None:
    assert averaging_bound(2, 0.1) == pytest.approx(0.0444288, abs=1e-6)


def test_averaging_bound_precondition() -> None:
    with pytest.raises(AveragingBoundPreconditionError, match="N\\^\\(-1/2\\)"):
        averaging_bound(4, 0.5)
    with pytest.raises(ValueError, match="N must be"):
        averaging_bound(0, 0.1)


def test_averaging_frobenius_bound_has_no_precondition() -> None:
    assert averaging_frobenius_bound(1, 0.1) == pytest.approx(2.0 * (math.exp(0.1) - 1.1))
    assert averaging_frobenius_bound(4, 0.5) > 0.0


def test_trotter_leading_of_x_and_y() -> None:
    assert trotter_leading([SX, SY], 0.1) == pytest.approx(0.01)


def test_trotter_leading_vanishes_for_commuting_terms() -> None:
    assert trotter_leading([SZ, 2.0 * SZ], 0.3) == 0.0
    assert trotter_leading([], 0.3) == 0.0


def test_trotter_leading_is_unchanged_by_reversing_terms() -> None:
    rng = np.random.default_rng(41)
    terms = [random_hermitian(rng, 4) for _ in range(3)]

    forward = trotter_leading(terms, 0.2)

    assert trotter_leading(terms[::-1], 0.2) == pytest.approx(forward, rel=1e-12)
    assert forward > 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_operator_norm_bounded_by_active_terms(n: int) -> None:
    rng = np.random.default_rng(42 + n)
    basis = PauliBasis(n)
    stacked = basis.stacked()

    for _ in range(334):
        N = int(rng.integers(1, len(basis) + 1))
        h = np.zeros(len(basis))
        h[rng.choice(len(basis), size=N, replace=False)] = rng.normal(size=N)
        H = np.einsum("k,kab->ab", h, stacked)
        assert operator_norm(H) <= math.sqrt(N) * frobenius_norm(H) + 1e-12


def test_penalty_weighted_norm_dominates_pruned_mass() -> None:
    rng = np.random.default_rng(45)
    penalty = build_penalty(Exponential(x=2.0), PauliBasis(2))

    for _ in range(200):
        h = rng.normal(size=15)
        cutoff = float(rng.uniform(1.0, 20.0))
        dropped = h - prune(h, penalty, cutoff).coefficients
        gamma_squared = metric_cost_clean(h, penalty)
        assert gamma_squared >= cutoff * float(np.sum(dropped**2)) - 1e-12


def test_product_norm_bound_dominates_product() -> None:
    bound = product_norm_bound([SX, SY], N=4)

    assert bound == pytest.approx(2.0)
    assert frobenius_norm(SX @ SY) <= bound


def test_prune_drops_expensive_directions() -> None:
    basis = PauliBasis(2)
    penalty = build_penalty(Exponential(x=2.0), basis)

    pruned = prune(np.ones(15), penalty, cutoff=10.0)

    np.testing.assert_array_equal(pruned.coefficients, np.where(basis.weights == 1, 1.0, 0.0))
    assert pruned.active == 6


def test_prune_counts_active_columns_over_a_path() -> None:
    penalty = build_penalty(Killing(), PauliBasis(1))
    path = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.5]])

    assert prune(path, penalty, cutoff=2.0).active == 2
    with pytest.raises(ValueError, match="cutoff"):
        prune(path, penalty, cutoff=0.0)


def test_pruning_bound() -> None:
    assert pruning_bound([1.0, 2.0, 3.0], 0.1, 4.0) == pytest.approx(0.3)
    assert pruning_bound([1.0, 2.0], 0.1, math.inf) == 0.0
    with pytest.raises(ValueError, match="non-negative"):
        pruning_bound([-1.0], 0.1, 4.0)


def test_random_paths_respect_pruning_and_averaging_bounds() -> None:
    penalty = build_penalty(Exponential(x=2.0), PauliBasis(2))

    results = sample_bound_checks(penalty, cutoff=10.0, S=8, count=100, seed=2024)

    assert len(results) == 100
    for result in results:
        by_name = {c.name: c for c in result.checks}
        assert by_name["pruning"].holds
        assert by_name["averaging_step"].holds
        assert by_name["averaging_frobenius_step"].holds
        assert by_name["trotter_total"].holds is None
        assert not result.violations


def test_cliff_cutoff_keeps_all_two_qubit_directions() -> None:
    penalty = build_penalty(Cliff(), PauliBasis(2))

    result = sample_bound_checks(penalty, cutoff=2.0, S=4, count=1, seed=0)[0]

    pruning = result.checks[0]
    assert pruning.name == "pruning"
    assert pruning.empirical == pytest.approx(0.0, abs=1e-9)


def test_long_step_skips_averaging_bound() -> None:
    hset = HamiltonianSet.from_labels(1, [{"x": 1.0}, {"y": 1.0}])
    schedule = ControlSchedule(0.05, np.tile([1.0, 0.0], (40, 1)), 1.0)
    penalty = build_penalty(Killing(), PauliBasis(1))

    result = empirical_bound_check(schedule, None, hset, penalty, cutoff=2.0, S=1)

    averaging = {c.name: c for c in result.checks}["averaging_step"]
    assert averaging.bound is None
    assert averaging.holds is None
    assert "delta" in averaging.note
    assert result.report.averaging_bound is None
    assert result.report.delta == pytest.approx(2.0)
    assert result.report.active_terms == 1


def test_single_direction_path_has_no_averaging_error() -> None:
    hset = HamiltonianSet.from_labels(1, [{"x": 1.0}, {"y": 1.0}])
    schedule = ControlSchedule(0.05, np.tile([0.0, 1.0], (8, 1)), 1.0)
    penalty = build_penalty(Killing(), PauliBasis(1))

    result = empirical_bound_check(schedule, None, hset, penalty, cutoff=2.0, S=4)

    for check in result.checks:
        assert check.empirical == pytest.approx(0.0, abs=1e-9)


def test_bound_check_frame_and_dict() -> None:
    rng = np.random.default_rng(1)
    hset = random_channels(rng, 1, 2)
    schedule = random_schedule(rng, 2, 6, 0.05, 1.0)
    penalty = build_penalty(Killing(), PauliBasis(1))

    result = empirical_bound_check(schedule, None, hset, penalty, cutoff=2.0, S=3)
    frame = result.to_frame()

    assert isinstance(frame, pd.DataFrame)
    assert list(frame.columns) == ["name", "empirical", "bound", "holds", "note"]
    assert result.to_dict()["report"]["steps"] == 3


def test_bound_check_rejects_zero_steps() -> None:
    hset = HamiltonianSet.from_labels(1, [{"x": 1.0}])
    schedule = ControlSchedule(0.1, [[1.0]], 1.0)
    penalty = build_penalty(Killing(), PauliBasis(1))

    with pytest.raises(ValueError, match="S must be"):
        empirical_bound_check(schedule, None, hset, penalty, 2.0, 0)


def test_sample_bound_checks_independent_of_workers() -> None:
    penalty = build_penalty(Killing(), PauliBasis(1))

    serial = sample_bound_checks(penalty, 2.0, S=4, count=6, seed=3, workers=1)
    threaded = sample_bound_checks(penalty, 2.0, S=4, count=6, seed=3, workers=3)

    for a, b in zip(serial, threaded):
        pd.testing.assert_frame_equal(a.to_frame(), b.to_frame())


def test_random_channels_are_normalised() -> None:
    hset = random_channels(np.random.default_rng(5), 2, 3)

    assert hset.channels == 3
    for member in hset.clean:
        assert frobenius_norm(member) == pytest.approx(1.0)
