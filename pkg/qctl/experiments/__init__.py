"""Experiment drivers, run artifacts and the provenance manifest."""

from .figure2 import figure2_channels, hadamard, run_figure2, x_orbit_lower_bound
from .io import CSV_SCHEMAS, OutputWriter, RunManifest, config_hash, dumps, read_schedule
from .reports import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, report_summary
from .runner import (
    RunResult,
    run,
    run_basis,
    run_bounds,
    run_metrics,
    run_optimize,
    run_simulate,
)

__all__ = [
    "CSV_SCHEMAS",
    "EXIT_CONFIG",
    "EXIT_INFEASIBLE",
    "EXIT_OK",
    "OutputWriter",
    "RunManifest",
    "RunResult",
    "config_hash",
    "dumps",
    "figure2_channels",
    "hadamard",
    "read_schedule",
    "report_summary",
    "run",
    "run_basis",
    "run_bounds",
    "run_figure2",
    "run_metrics",
    "run_optimize",
    "run_simulate",
    "x_orbit_lower_bound",
]
