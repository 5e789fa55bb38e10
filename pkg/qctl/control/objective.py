from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, TypeVar

import numpy as np
import numpy.typing as npt

from qctl.dynamics import (
    ControlSchedule,
    HamiltonianSet,
    first_hit_index,
    propagate_segments,
    segments,
)
from qctl.linalg import as_square, is_unitary, trace_phase_distances
from qctl.noise import ScenarioSet

from .risk import RiskMeasure, risk

logger = logging.getLogger(__name__)

GRID_RTOL = 1e-9
ETA_CEILING = 2.0

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class OCPProblem:
    """
    Discretised robust time-optimal control problem.

    Minimise risk(T_xi) over schedules on a fixed grid of `horizon / dt`
    steps, with ||h(t_k)||_2 <= h_max and the chance constraint
    P[T_xi <= horizon] >= 1 - beta enforced by an exterior penalty of weight
    `penalty_mu`.
    """

    hset: HamiltonianSet
    target: np.ndarray = field(repr=False)
    eta: float
    horizon: float
    dt: float
    h_max: float = 1.0
    beta: float = 0.0
    phase_invariant: bool = False
    risk: RiskMeasure = RiskMeasure()
    penalty_mu: float = 10.0

    def __post_init__(self) -> None:
        target = as_square(self.target)
        if target.shape[0] != self.hset.dim:
            raise ValueError(
                f"target has dimension {target.shape[0]}, Hamiltonian set has {self.hset.dim}"
            )
        if not is_unitary(target):
            raise ValueError("target must be unitary")
        if not 0.0 < self.eta < ETA_CEILING:
            raise ValueError(f"eta must be in (0, {ETA_CEILING})")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if self.dt <= 0 or self.horizon <= 0 or self.h_max <= 0:
            raise ValueError("dt, horizon and h_max must be positive")
        ratio = self.horizon / self.dt
        if abs(ratio - round(ratio)) > GRID_RTOL * max(1.0, ratio):
            raise ValueError(f"horizon {self.horizon} is not a multiple of dt {self.dt}")
        if not np.isfinite(self.penalty_mu) or self.penalty_mu < 0:
            raise ValueError("penalty_mu must be finite and non-negative")
        target.setflags(write=False)
        object.__setattr__(self, "target", target)

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def channels(self) -> int:
        return self.hset.channels

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def zero_schedule(self) -> ControlSchedule:
        return ControlSchedule.zeros(self.steps, self.channels, self.dt, self.h_max)

    def schedule(self, values: npt.ArrayLike) -> ControlSchedule:
        return ControlSchedule(self.dt, values, self.h_max)

    def chance_penalty(self, success_fraction: float) -> float:
        return self.penalty_mu * max(0.0, (1.0 - self.beta) - success_fraction)


class ObjectiveComponents(NamedTuple):
    """
    Terms of the SAA objective.

    Attributes:
        objective: risk_value + penalty_value.
        risk_value: Risk of the censored hitting times.
        penalty_value: Chance-constraint penalty.
        success_fraction: Fraction of scenarios that hit before the horizon.
        hitting_times: Per-scenario hitting times, censored at the horizon.
        hit: Per-scenario hit flags.
    """

    objective: float
    risk_value: float
    penalty_value: float
    success_fraction: float
    hitting_times: np.ndarray
    hit: np.ndarray


class ScenarioEvaluator:
    """
    Evaluates control grids against a fixed scenario set.

    The jump-refined segments of every scenario are computed once; each
    evaluation only swaps in new control values. Scenario evaluations fan out
    over a thread pool when `workers > 1` and are merged in scenario order.

    Besides the exact objective the evaluator exposes a continuous surrogate:
    hitting times are linearly interpolated between grid points where the
    trace-phase distance crosses eta, and a scenario that never hits scores
    horizon + miss_slope * (closest approach - eta).
    """

    def __init__(
        self,
        problem: OCPProblem,
        scenarios: ScenarioSet,
        workers: int = 1,
        miss_slope: float | None = None,
    ) -> None:
        if scenarios.channels != problem.channels:
            raise ValueError(
                f"scenarios have {scenarios.channels} channels, problem has {problem.channels}"
            )
        if not np.isclose(scenarios.horizon, problem.horizon, rtol=GRID_RTOL, atol=0.0):
            raise ValueError(
                f"scenario horizon {scenarios.horizon} does not match problem horizon "
                f"{problem.horizon}"
            )
        self.problem = problem
        self.scenarios = scenarios
        self.workers = max(1, int(workers))
        self.miss_slope = problem.horizon if miss_slope is None else float(miss_slope)
        zero = problem.zero_schedule()
        self._pieces = [segments(zero, r) for r in scenarios]

    def __len__(self) -> int:
        return len(self._pieces)

    def _map(self, fn: Callable[[int], T]) -> list[T]:
        indices = range(len(self._pieces))
        if self.workers <= 1 or len(self._pieces) == 1:
            return [fn(i) for i in indices]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, indices))

    def unitaries(self, values: np.ndarray, index: int) -> np.ndarray:
        pieces = self._pieces[index]
        swapped = pieces._replace(controls=values[pieces.step_index])
        return propagate_segments(swapped, self.problem.steps, self.problem.hset)

    def exact(self, values: np.ndarray) -> ObjectiveComponents:
        """Exact SAA objective; `values` is a (steps, channels) array."""
        problem = self.problem

        def _hit(index: int) -> int | None:
            return first_hit_index(
                self.unitaries(values, index), problem.target, problem.eta, problem.phase_invariant
            )

        indices = self._map(_hit)
        hit = np.array([k is not None for k in indices], dtype=bool)
        times = np.array(
            [problem.horizon if k is None else problem.times[k] for k in indices], dtype=float
        )
        success = float(np.mean(hit))
        risk_value = risk(times, problem.risk)
        penalty_value = problem.chance_penalty(success)
        return ObjectiveComponents(
            objective=risk_value + penalty_value,
            risk_value=risk_value,
            penalty_value=penalty_value,
            success_fraction=success,
            hitting_times=times,
            hit=hit,
        )

    def _proxy_distances(self, unitaries: np.ndarray) -> np.ndarray:
        if self.problem.phase_invariant:
            upper, _ = trace_phase_distances(unitaries, self.problem.target)
            return upper
        return np.max(np.abs(unitaries - self.problem.target), axis=(1, 2))

    def surrogate(self, values: np.ndarray) -> float:
        """Continuous stand-in for `exact`, used for finite differences."""
        problem = self.problem
        dt = problem.dt

        def _soft(index: int) -> tuple[float, bool]:
            distances = self._proxy_distances(self.unitaries(values, index))
            below = np.flatnonzero(distances <= problem.eta)
            if below.size == 0:
                excess = float(np.min(distances)) - problem.eta
                return problem.horizon + self.miss_slope * excess, False
            k = int(below[0])
            if k == 0:
                return 0.0, True
            before, after = distances[k - 1], distances[k]
            fraction = np.clip((before - problem.eta) / max(before - after, 1e-300), 0.0, 1.0)
            return float(problem.times[k - 1] + fraction * dt), True

        results = self._map(_soft)
        times = np.array([t for t, _ in results], dtype=float)
        success = float(np.mean([h for _, h in results]))
        return risk(times, problem.risk) + problem.chance_penalty(success)


def saa_objective(
    schedule: ControlSchedule,
    scenarios: ScenarioSet,
    problem: OCPProblem,
    workers: int = 1,
) -> tuple[float, ObjectiveComponents]:
    """
    Sample-average objective of one schedule.

    The calculation:
        objective = risk({T_xi censored at horizon})
                    + penalty_mu * max(0, (1 - beta) - success_fraction)
    """
    if schedule.channels != problem.channels or schedule.steps != problem.steps:
        raise ValueError(
            f"schedule grid {schedule.values.shape} does not match the problem grid "
            f"({problem.steps}, {problem.channels})"
        )
    if not np.isclose(schedule.dt, problem.dt, rtol=GRID_RTOL, atol=0.0):
        raise ValueError(f"schedule dt {schedule.dt} does not match problem dt {problem.dt}")
    components = ScenarioEvaluator(problem, scenarios, workers).exact(
        np.asarray(schedule.values)
    )
    logger.debug(
        "saa objective %.6g (risk %.6g, penalty %.6g, success %.3f)",
        components.objective,
        components.risk_value,
        components.penalty_value,
        components.success_fraction,
    )
    return components.objective, components
