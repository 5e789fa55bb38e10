from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
import pandas as pd

from qctl import __version__
from qctl.bounds import EmpiricalBoundCheck, empirical_bound_check, sample_bound_checks
from qctl.config import ConfigError, ExperimentConfig
from qctl.control import OCPProblem, noise_free_scenarios, optimize
from qctl.dynamics import (
    ControlSchedule,
    HamiltonianSet,
    apply_to_state,
    chance_estimate,
    propagate,
)
from qctl.linalg import sup_distance
from qctl.metrics import (
    PenaltyMatrix,
    build_penalty,
    compare_noisy_costs,
    metric_cost_clean,
    operator_complexity,
    path_length,
    step_costs,
)
from qctl.noise import NoiseParams, NoiseRealization, ScenarioSet, build_scenarios
from qctl.pauli import PauliBasis

from .figure2 import run_figure2
from .io import OutputWriter, RunManifest, read_schedule, utc_now
from .reports import EXIT_INFEASIBLE, EXIT_OK, report_summary

logger = logging.getLogger(__name__)

Experiment = Callable[[ExperimentConfig, OutputWriter], int]


class RunResult(NamedTuple):
    exit_code: int
    directory: Path
    outputs: tuple[str, ...]
    manifest: Path


def run(config: ExperimentConfig) -> RunResult:
    """
    Run one validated experiment and write its manifest.

    Usage:
        result = run(ConfigLoader.load("configs/optimize.yaml"))

    Returns the exit code the CLI should use: 0 on success and 2 when the
    result violates its chance constraint. Configuration problems raise
    ConfigError.
    """
    experiments: dict[str, Experiment] = {
        "basis": run_basis,
        "metrics": run_metrics,
        "simulate": run_simulate,
        "optimize": run_optimize,
        "bounds": run_bounds,
        "figure2": run_figure2,
    }
    started = utc_now()
    writer = OutputWriter(config.output.directory)
    logger.info(
        "running %s experiment (seed %s, %d workers) into %s",
        config.experiment,
        config.seed,
        config.workers,
        writer.directory,
    )
    exit_code = experiments[config.experiment](config, writer)
    manifest = RunManifest.build(config, writer, started, exit_code, __version__)
    path = manifest.write(writer.directory)
    logger.info("%s finished with exit code %d", config.experiment, exit_code)
    return RunResult(exit_code, writer.directory, manifest.outputs, path)


def _hamiltonians(config: ExperimentConfig) -> HamiltonianSet:
    if config.hamiltonians is None:
        raise ConfigError("is required", "hamiltonians")
    return config.hamiltonians.build()


def _penalty(config: ExperimentConfig) -> PenaltyMatrix:
    return build_penalty(config.metric.family(), PauliBasis(config.n))


def run_basis(config: ExperimentConfig, writer: OutputWriter) -> int:
    basis = PauliBasis(config.n)
    frame = pd.DataFrame(
        {
            "index": [e.index for e in basis],
            "label": basis.labels,
            "weight": basis.weights,
        }
    )
    writer.csv("basis.csv", frame, "basis")
    counts = np.bincount(basis.weights, minlength=config.n + 1)[1:]
    writer.json(
        "basis.json",
        {
            "n": config.n,
            "size": len(basis),
            "weight_counts": {str(k + 1): int(c) for k, c in enumerate(counts)},
            "elements": frame.to_dict(orient="records"),
        },
    )
    return EXIT_OK


def run_metrics(config: ExperimentConfig, writer: OutputWriter) -> int:
    penalty = _penalty(config)
    basis = penalty.basis
    writer.csv(
        "penalty.csv",
        pd.DataFrame({"label": basis.labels, "weight": basis.weights, "penalty": penalty.diag}),
        "penalty",
    )
    summary: dict[str, object] = {"metric": penalty.kind, "n": config.n}

    clean_costs = []
    for i, h in enumerate(config.metrics.coefficients):
        if len(h) != len(basis):
            raise ConfigError(f"needs {len(basis)} coefficients", f"metrics.coefficients[{i}]")
        clean_costs.append({"h": list(h), "cost": metric_cost_clean(h, penalty)})
    summary["clean"] = clean_costs

    if config.metrics.noisy:
        section = config.hamiltonians
        assert section is not None
        noisy_costs = []
        for i, (h, alpha) in enumerate(config.metrics.noisy):
            try:
                comparison = compare_noisy_costs(h, alpha, section.clean, section.noisy, penalty)
            except ValueError as exc:
                raise ConfigError(str(exc), f"metrics.noisy[{i}]") from exc
            if comparison.discrepancy > 1e-12:
                logger.info(
                    "noisy cost %d: closed form %.12g differs from expansion %.12g",
                    i,
                    comparison.closed_form,
                    comparison.oracle,
                )
            noisy_costs.append({"h": list(h), "alpha": list(alpha), **comparison._asdict()})
        summary["noisy"] = noisy_costs

    if config.metrics.schedule is not None:
        assert config.grid is not None
        hset = _hamiltonians(config)
        schedule = read_schedule(config.metrics.schedule, config.grid.h_max, "metrics.schedule")
        costs = step_costs(schedule, None, hset, penalty)
        writer.csv(
            "step_costs.csv",
            pd.DataFrame({"t": schedule.times[:-1], "g": costs}),
            "step_costs",
        )
        summary["path_length"] = path_length(schedule, None, hset, penalty)
        summary["operator_complexity"] = operator_complexity(schedule, hset, penalty)

    writer.json("metrics.json", summary)
    return EXIT_OK


def _simulate_schedule(config: ExperimentConfig, hset: HamiltonianSet) -> ControlSchedule:
    grid = config.grid
    assert grid is not None
    if config.simulate.schedule is not None:
        schedule = read_schedule(config.simulate.schedule, grid.h_max, "simulate.schedule")
        if schedule.steps != grid.steps or not np.isclose(schedule.dt, grid.dt, rtol=1e-9):
            raise ConfigError(
                f"schedule grid ({schedule.steps} x {schedule.dt:g}) does not match "
                f"grid ({grid.steps} x {grid.dt:g})",
                "simulate.schedule",
            )
    else:
        row = np.asarray(config.simulate.constant, dtype=float)
        try:
            schedule = ControlSchedule(grid.dt, np.tile(row, (grid.steps, 1)), grid.h_max)
        except ValueError as exc:
            raise ConfigError(str(exc), "simulate.constant") from exc
    if schedule.channels != hset.channels:
        raise ConfigError(
            f"schedule has {schedule.channels} channels, expected {hset.channels}", "simulate"
        )
    return schedule


def _scenarios(config: ExperimentConfig, channels: int) -> ScenarioSet | None:
    """Seeded scenario set; None when the noise can never fire."""
    if config.noise.params.noise_free:
        return None
    assert config.grid is not None and config.seed is not None
    return build_scenarios(
        config.noise.params,
        config.grid.horizon,
        channels,
        config.noise.scenarios,
        config.seed,
    )


def run_simulate(config: ExperimentConfig, writer: OutputWriter) -> int:
    grid = config.grid
    assert grid is not None
    hset = _hamiltonians(config)
    schedule = _simulate_schedule(config, hset)
    scenarios = _scenarios(config, hset.channels)
    if scenarios is None:
        scenarios = ScenarioSet(
            config.seed or 0,
            NoiseParams(0.0, 0.0),
            grid.horizon,
            [NoiseRealization.noise_free(hset.channels, grid.horizon)],
        )
    else:
        writer.text("scenarios.json", scenarios.to_json() + "\n")
    try:
        penalty: PenaltyMatrix | None = _penalty(config)
    except ValueError:
        penalty = None

    psi0 = np.zeros(hset.dim, dtype=np.complex128)
    psi0[0 if config.simulate.initial_state == "0" else -1] = 1.0
    target = config.target

    rows: list[dict[str, object]] = []
    width = max(4, len(str(len(scenarios) - 1)))
    for index, realization in enumerate(scenarios):
        traj = propagate(schedule, realization, hset)
        name = f"scenario_{index:0{width}d}"
        writer.csv(f"trajectories/{name}.csv", traj.to_frame(), "unitaries")
        if hset.dim == 2:
            writer.csv(f"bloch/{name}.csv", apply_to_state(traj, psi0).to_frame(), "bloch")
        row: dict[str, object] = {"scenario": index}
        if penalty is not None:
            row["path_length"] = path_length(schedule, realization, hset, penalty)
        if target is not None:
            row["final_distance"] = sup_distance(
                traj.final, target.matrix(config.n), target.phase_invariant
            )
        rows.append(row)

    summary: dict[str, object] = {
        "scenarios": len(scenarios),
        "steps": schedule.steps,
        "dt": schedule.dt,
    }
    if target is not None:
        estimate = chance_estimate(
            schedule,
            scenarios,
            hset,
            target.matrix(config.n),
            target.eta,
            target.phase_invariant,
            config.workers,
        )
        for row, time, hit in zip(rows, estimate.hitting_times, estimate.hit):
            row["hitting_time"] = float(time) if hit else None
        summary["success_fraction"] = estimate.success_fraction
    summary["per_scenario"] = rows
    writer.json("summary.json", summary)
    return EXIT_OK


def _problem(config: ExperimentConfig, hset: HamiltonianSet) -> OCPProblem:
    grid, target = config.grid, config.target
    assert grid is not None and target is not None
    return OCPProblem(
        hset=hset,
        target=target.matrix(config.n),
        eta=target.eta,
        horizon=grid.horizon,
        dt=grid.dt,
        h_max=grid.h_max,
        beta=config.optimizer.beta,
        phase_invariant=target.phase_invariant,
        risk=config.optimizer.risk,
        penalty_mu=config.optimizer.penalty_mu,
    )


def run_optimize(config: ExperimentConfig, writer: OutputWriter) -> int:
    hset = _hamiltonians(config)
    problem = _problem(config, hset)
    scenarios = _scenarios(config, hset.channels)
    if scenarios is None:
        scenarios = noise_free_scenarios(problem, config.seed or 0)
    else:
        writer.text("scenarios.json", scenarios.to_json() + "\n")

    report = optimize(problem, scenarios, config.optimizer.settings, config.workers)
    try:
        penalty = _penalty(config)
    except ValueError:
        penalty = None

    writer.csv("schedule.csv", report.schedule.to_frame(), "schedule")
    writer.csv("iterations.csv", report.log_frame(), "iterations")
    writer.json("report.json", report_summary(report, problem, penalty))
    return EXIT_OK if report.converged else EXIT_INFEASIBLE


def _check_rows(path: int, result: EmpiricalBoundCheck) -> list[dict[str, object]]:
    return [{"path": path, **check._asdict()} for check in result.checks]


def run_bounds(config: ExperimentConfig, writer: OutputWriter) -> int:
    penalty = _penalty(config)
    section = config.bounds
    if section.schedule is not None:
        assert config.grid is not None
        hset = _hamiltonians(config)
        schedule = read_schedule(section.schedule, config.grid.h_max, "bounds.schedule")
        results = [
            empirical_bound_check(schedule, None, hset, penalty, section.cutoff, section.steps)
        ]
    else:
        assert config.seed is not None
        grid = config.grid
        results = sample_bound_checks(
            penalty,
            section.cutoff,
            section.steps,
            section.paths,
            config.seed,
            channels=section.channels,
            steps=section.path_steps,
            dt=0.05 if grid is None else grid.dt,
            h_max=1.0 if grid is None else grid.h_max,
            workers=config.workers,
        )

    rows = [row for i, result in enumerate(results) for row in _check_rows(i, result)]
    writer.csv("bound_checks.csv", pd.DataFrame(rows), "bound_checks")
    violations = sum(len(r.violations) for r in results)
    if violations:
        logger.error("%d bound violations over %d paths", violations, len(results))
    writer.json(
        "bounds.json",
        {
            "metric": penalty.kind,
            "cutoff": section.cutoff,
            "steps": section.steps,
            "paths": len(results),
            "violations": violations,
            "reports": [r.report.to_dict() for r in results],
        },
    )
    return EXIT_OK
