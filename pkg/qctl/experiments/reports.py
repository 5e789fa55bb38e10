from __future__ import annotations

import numpy as np

from qctl.control import OCPProblem, OptimizationReport
from qctl.linalg import killing_geodesic_distance, min_phase_geodesic_distance
from qctl.metrics import PenaltyMatrix, operator_complexity

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3


def report_summary(
    report: OptimizationReport, problem: OCPProblem, penalty: PenaltyMatrix | None
) -> dict[str, object]:
    """Report fields plus the geodesic lower bound and, if available, the schedule's cost."""
    identity = np.eye(problem.hset.dim, dtype=np.complex128)
    distance = (
        min_phase_geodesic_distance(identity, problem.target)
        if problem.phase_invariant
        else killing_geodesic_distance(identity, problem.target)
    )
    summary: dict[str, object] = {
        **report.to_dict(),
        "risk": problem.risk.label,
        "beta": problem.beta,
        "eta": problem.eta,
        "h_max": problem.h_max,
        "geodesic_distance": distance,
        "geodesic_time_bound": distance / problem.h_max,
    }
    if penalty is not None and report.step_count >= 1:
        steps = min(report.step_count, report.schedule.steps)
        summary["operator_complexity"] = operator_complexity(
            report.schedule, problem.hset, penalty, steps=steps
        )
    return summary
