from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, NamedTuple

import numpy as np
import pandas as pd

from qctl.dynamics import ControlSchedule
from qctl.noise import NoiseParams, ScenarioSet, build_scenarios

from .objective import ObjectiveComponents, OCPProblem, ScenarioEvaluator
from .warm_start import geodesic_warm_start, nominal_warm_start

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    """
    Settings for projected finite-difference descent.

    Attributes:
        max_iters: Descent iterations per start.
        fd_step: Central-difference step on each control value.
        step_size: Initial step length along the negative gradient.
        step_growth: Step multiplier after an accepted step.
        backtrack: Step multiplier after a rejected trial.
        max_backtracks: Trials per iteration before giving up on a start.
        grad_tol: Stop a start when the gradient norm falls below this.
        restarts: Number of seeded random starts besides the warm starts.
        init_seed: Seed for random starts and warm-start perturbations.
        warm_start: Include the geodesic and nominal warm starts.
        warm_start_margin: Nominal warm start targets margin * eta.
        warm_start_iters: Ascent iterations per nominal trial length.
        miss_slope: Surrogate cost per unit of closest-approach excess;
                    defaults to the horizon.
    """

    max_iters: int = 20
    fd_step: float = 1e-3
    step_size: float = 0.5
    step_growth: float = 2.0
    backtrack: float = 0.5
    max_backtracks: int = 8
    grad_tol: float = 1e-9
    restarts: int = 1
    init_seed: int = 0
    warm_start: bool = True
    warm_start_margin: float = 0.5
    warm_start_iters: int = 300
    miss_slope: float | None = None

    def __post_init__(self) -> None:
        if self.max_iters < 0 or self.restarts < 0 or self.max_backtracks < 1:
            raise ValueError("max_iters and restarts must be >= 0, max_backtracks >= 1")
        if self.fd_step <= 0 or self.step_size <= 0:
            raise ValueError("fd_step and step_size must be positive")
        if not 0.0 < self.backtrack < 1.0 or self.step_growth < 1.0:
            raise ValueError("backtrack must be in (0, 1) and step_growth >= 1")
        if not 0.0 < self.warm_start_margin <= 1.0:
            raise ValueError("warm_start_margin must be in (0, 1]")


class IterationRecord(NamedTuple):
    """One line of the optimizer's iteration log."""

    start: str
    iteration: int
    objective: float
    surrogate: float
    step_size: float
    accepted: bool


class OptimizationReport(NamedTuple):
    """
    Best schedule found and its SAA objective on the training scenarios.

    Attributes:
        schedule: Optimised controls on the full horizon grid.
        objective: risk_value + penalty_value.
        risk_value: Risk of the censored hitting times.
        penalty_value: Chance-constraint penalty.
        success_fraction: Fraction of training scenarios that hit.
        iterations: Accepted descent steps over all starts.
        converged: True when the chance constraint holds on the training set.
        seed: Seed that drove the random starts.
        hitting_times: Censored hitting time per training scenario.
        start: Name of the start the best schedule descends from.
        iteration_log: Every trial, accepted or not, in evaluation order.
    """

    schedule: ControlSchedule
    objective: float
    risk_value: float
    penalty_value: float
    success_fraction: float
    iterations: int
    converged: bool
    seed: int
    hitting_times: np.ndarray
    start: str = "zero"
    iteration_log: tuple[IterationRecord, ...] = ()

    @property
    def t_star(self) -> float:
        """Risk of the hitting times; the hitting time itself for a single scenario."""
        return self.risk_value

    @property
    def step_count(self) -> int:
        """Grid intervals up to T*, the discretised gate count."""
        return int(math.ceil(self.t_star / self.schedule.dt - 1e-9))

    def log_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.iteration_log), columns=IterationRecord._fields)

    def to_dict(self) -> dict[str, Any]:
        return {
            "objective": self.objective,
            "risk_value": self.risk_value,
            "penalty_value": self.penalty_value,
            "success_fraction": self.success_fraction,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "start": self.start,
            "t_star": self.t_star,
            "step_count": self.step_count,
            "dt": self.schedule.dt,
            "horizon": self.schedule.horizon,
            "hitting_times": self.hitting_times.tolist(),
        }


def _check_finite(value: float, start: str, iteration: int) -> None:
    if not np.isfinite(value):
        raise RuntimeError(
            f"non-finite objective {value} at iteration {iteration} of start {start!r}"
        )


def _fd_gradient(evaluator: ScenarioEvaluator, values: np.ndarray, fd_step: float) -> np.ndarray:
    gradient = np.zeros_like(values)
    for index in np.ndindex(values.shape):
        shifted = values.copy()
        shifted[index] += fd_step
        upper = evaluator.surrogate(shifted)
        shifted[index] -= 2.0 * fd_step
        lower = evaluator.surrogate(shifted)
        gradient[index] = (upper - lower) / (2.0 * fd_step)
    return gradient


def _descend(
    evaluator: ScenarioEvaluator,
    values: np.ndarray,
    start: str,
    config: OptimizerConfig,
    log: list[IterationRecord],
) -> tuple[np.ndarray, ObjectiveComponents, int]:
    """
    Projected descent from one start.

    A trial step is accepted only when the surrogate decreases and the exact
    objective does not increase, so the exact objective is monotone over the
    accepted iterates of a start.
    """
    h_max = evaluator.problem.h_max
    values = ControlSchedule.project(values, h_max)
    exact = evaluator.exact(values)
    surrogate = evaluator.surrogate(values)
    _check_finite(exact.objective, start, 0)
    _check_finite(surrogate, start, 0)
    log.append(IterationRecord(start, 0, exact.objective, surrogate, 0.0, True))

    step = config.step_size
    accepted_steps = 0
    for iteration in range(1, config.max_iters + 1):
        gradient = _fd_gradient(evaluator, values, config.fd_step)
        if not np.all(np.isfinite(gradient)):
            raise RuntimeError(f"non-finite gradient at iteration {iteration} of start {start!r}")
        if np.linalg.norm(gradient) < config.grad_tol:
            logger.debug("start %s stationary after %d iterations", start, iteration - 1)
            break

        moved = False
        for _ in range(config.max_backtracks):
            candidate = ControlSchedule.project(values - step * gradient, h_max)
            candidate_surrogate = evaluator.surrogate(candidate)
            _check_finite(candidate_surrogate, start, iteration)
            if candidate_surrogate < surrogate:
                candidate_exact = evaluator.exact(candidate)
                _check_finite(candidate_exact.objective, start, iteration)
                if candidate_exact.objective <= exact.objective:
                    values, exact, surrogate = candidate, candidate_exact, candidate_surrogate
                    log.append(
                        IterationRecord(start, iteration, exact.objective, surrogate, step, True)
                    )
                    moved = True
                    break
                log.append(
                    IterationRecord(
                        start,
                        iteration,
                        candidate_exact.objective,
                        candidate_surrogate,
                        step,
                        False,
                    )
                )
            step *= config.backtrack

        if not moved:
            logger.debug("start %s: no acceptable step at iteration %d", start, iteration)
            break
        accepted_steps += 1
        step = step * config.step_growth
        logger.info(
            "start %s iteration %d: objective %.6g success %.3f",
            start,
            iteration,
            exact.objective,
            exact.success_fraction,
        )
    return values, exact, accepted_steps


def _starts(problem: OCPProblem, config: OptimizerConfig) -> list[tuple[str, np.ndarray]]:
    starts: list[tuple[str, np.ndarray]] = []
    if config.warm_start:
        starts.append(("geodesic", geodesic_warm_start(problem)))
        nominal = nominal_warm_start(
            problem,
            iterations=config.warm_start_iters,
            margin=config.warm_start_margin,
            seed=config.init_seed,
        )
        if nominal is not None:
            starts.append(("nominal", nominal))
    for restart in range(config.restarts):
        rng = np.random.default_rng([config.init_seed, restart])
        raw = rng.uniform(-1.0, 1.0, size=(problem.steps, problem.channels)) * problem.h_max
        starts.append((f"random-{restart}", ControlSchedule.project(raw, problem.h_max)))
    if not starts:
        starts.append(("zero", np.zeros((problem.steps, problem.channels))))
    return starts


def optimize(
    problem: OCPProblem,
    scenarios: ScenarioSet,
    config: OptimizerConfig | None = None,
    workers: int = 1,
) -> OptimizationReport:
    """
    Minimise the SAA objective over bounded piecewise-constant controls.

    Every start (warm starts, then seeded random ones) is improved by
    projected finite-difference descent against the same scenario set, and
    the start with the lowest exact objective wins; ties keep the earlier
    start.

    Args:
        problem: Discretised control problem.
        scenarios: Training scenarios, fixed for the whole run.
        config: Descent settings.
        workers: Threads used to evaluate scenarios.

    Returns:
        OptimizationReport of the best start.
    """
    config = config or OptimizerConfig()
    evaluator = ScenarioEvaluator(problem, scenarios, workers, config.miss_slope)
    log: list[IterationRecord] = []

    zero = np.zeros((problem.steps, problem.channels))
    baseline = evaluator.exact(zero)
    if bool(np.all(baseline.hit)) and float(np.max(baseline.hitting_times)) == 0.0:
        logger.info("target already within eta of the identity")
        log.append(IterationRecord("zero", 0, baseline.objective, 0.0, 0.0, True))
        return _report(problem, zero, baseline, 0, config, "zero", log)

    best: tuple[np.ndarray, ObjectiveComponents, str] | None = None
    total_steps = 0
    for name, initial in _starts(problem, config):
        values, components, accepted = _descend(evaluator, initial, name, config, log)
        total_steps += accepted
        logger.info(
            "start %s finished: objective %.6g after %d accepted steps",
            name,
            components.objective,
            accepted,
        )
        if best is None or components.objective < best[1].objective:
            best = (values, components, name)

    assert best is not None
    values, components, name = best
    return _report(problem, values, components, total_steps, config, name, log)


def _report(
    problem: OCPProblem,
    values: np.ndarray,
    components: ObjectiveComponents,
    iterations: int,
    config: OptimizerConfig,
    start: str,
    log: list[IterationRecord],
) -> OptimizationReport:
    converged = components.success_fraction >= 1.0 - problem.beta
    if not converged:
        logger.warning(
            "chance constraint not met: success %.3f < %.3f",
            components.success_fraction,
            1.0 - problem.beta,
        )
    return OptimizationReport(
        schedule=problem.schedule(values),
        objective=components.objective,
        risk_value=components.risk_value,
        penalty_value=components.penalty_value,
        success_fraction=components.success_fraction,
        iterations=iterations,
        converged=converged,
        seed=config.init_seed,
        hitting_times=components.hitting_times,
        start=start,
        iteration_log=tuple(log),
    )


def noise_free_scenarios(problem: OCPProblem, seed: int = 0) -> ScenarioSet:
    """The single scenario with every channel always intended."""
    return build_scenarios(NoiseParams(0.0, 0.0), problem.horizon, problem.channels, 1, seed)


def solve_deterministic(
    problem: OCPProblem,
    config: OptimizerConfig | None = None,
) -> OptimizationReport:
    """
    Deterministic time-optimal control: `optimize` on the noise-free scenario.

    beta is ignored; the single scenario must hit for the chance constraint
    to hold.
    """
    deterministic = replace(problem, beta=0.0)
    return optimize(deterministic, noise_free_scenarios(deterministic), config)
