from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, NamedTuple

import numpy as np
import pandas as pd

from qctl.dynamics import ControlSchedule, HamiltonianSet
from qctl.linalg import (
    expm_neg_i,
    expm_neg_i_batch,
    frobenius_norm,
    killing_geodesic_distance,
    random_hermitian,
)
from qctl.metrics import PenaltyMatrix, segment_coefficients, step_costs
from qctl.noise import NoiseRealization
from qctl.pauli import PauliBasis, reconstruct

from .approximations import (
    AveragingBoundPreconditionError,
    BoundReport,
    averaging_bound,
    averaging_frobenius_bound,
    prune,
    pruning_bound,
    trotter_leading,
)

logger = logging.getLogger(__name__)

BOUND_ATOL = 1e-12


class BoundCheck(NamedTuple):
    """
    One empirical error next to its bound.

    `holds` is None when the bound was skipped (precondition not met) or is
    only a leading-order estimate.
    """

    name: str
    empirical: float
    bound: float | None
    holds: bool | None
    note: str = ""


class EmpiricalBoundCheck(NamedTuple):
    report: BoundReport
    checks: tuple[BoundCheck, ...]

    @property
    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.holds is False]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.checks), columns=BoundCheck._fields)

    def to_dict(self) -> dict[str, Any]:
        return {
            "report": self.report.to_dict(),
            "checks": [c._asdict() for c in self.checks],
        }


def _ordered_product(generators: np.ndarray, durations: np.ndarray, dim: int) -> np.ndarray:
    current = np.eye(dim, dtype=np.complex128)
    if len(durations) == 0:
        return current
    for factor in expm_neg_i_batch(generators, durations):
        current = factor @ current
    return current


def _split_by_length(
    coefficients: np.ndarray, durations: np.ndarray, steps: int
) -> tuple[list[list[tuple[np.ndarray, float]]], float]:
    """
    Cut a piecewise-constant path into `steps` pieces of equal Killing length.

    Pieces with zero speed act as the identity and are dropped. Returns the
    (coefficients, duration) lists per step and the step length delta.
    """
    speeds = np.linalg.norm(coefficients, axis=1)
    total = float(np.dot(speeds, durations))
    out: list[list[tuple[np.ndarray, float]]] = [[] for _ in range(steps)]
    if total == 0.0:
        return out, 0.0
    delta = total / steps

    step = 0
    used = 0.0
    for c, tau, v in zip(coefficients, durations, speeds):
        if v == 0.0:
            continue
        remaining = tau * v
        while remaining > 0.0:
            room = np.inf if step == steps - 1 else delta - used
            if room <= 1e-15 * delta:
                step, used = step + 1, 0.0
                continue
            taken = min(remaining, room)
            out[step].append((c, taken / v))
            used += taken
            remaining -= taken
    return out, delta


def empirical_bound_check(
    schedule: ControlSchedule,
    realization: NoiseRealization | None,
    hset: HamiltonianSet,
    penalty: PenaltyMatrix,
    cutoff: float,
    S: int,
) -> EmpiricalBoundCheck:
    """
    Simulate the pruned, averaged and trotterized versions of a path.

    The full path is the noise-switched control path. Pruning drops Pauli
    directions with penalty >= cutoff; averaging cuts the pruned path into S
    steps of equal Killing length delta and replaces each ordered step by the
    exponential of its integrated generator; trotterization applies the
    integrated Pauli terms of each step one at a time, in basis order.

    Killing distances between consecutive approximations are reported next
    to the pruning bound, the averaging bound (per step and summed, skipped
    when delta >= N^(-1/2)), the Frobenius averaging bound and the
    leading-order trotter estimate.
    """
    if S < 1:
        raise ValueError("S must be at least 1")
    basis: PauliBasis = penalty.basis
    dim = basis.dim
    pieces, coefficients = segment_coefficients(schedule, realization, hset, basis)
    pruned = prune(coefficients, penalty, cutoff)
    N = max(pruned.active, 1)

    def _generators(rows: np.ndarray) -> np.ndarray:
        if len(rows) == 0:
            return np.zeros((0, dim, dim), dtype=np.complex128)
        return np.stack([reconstruct(row, basis) for row in rows])

    full_final = _ordered_product(_generators(coefficients), pieces.durations, dim)
    pruned_final = _ordered_product(
        _generators(pruned.coefficients), pieces.durations, dim
    )

    gammas = np.sqrt(step_costs(schedule, realization, hset, penalty))
    prune_check = BoundCheck(
        name="pruning",
        empirical=killing_geodesic_distance(full_final, pruned_final),
        bound=pruning_bound(gammas, schedule.dt, cutoff),
        holds=None,
    )
    prune_check = prune_check._replace(
        holds=prune_check.empirical <= prune_check.bound + BOUND_ATOL
    )

    per_step, delta = _split_by_length(pruned.coefficients, pieces.durations, S)
    averaged_final = np.eye(dim, dtype=np.complex128)
    trotter_final = np.eye(dim, dtype=np.complex128)
    step_killing: list[float] = []
    step_frobenius: list[float] = []
    trotter_estimate = 0.0
    for step in per_step:
        if not step:
            step_killing.append(0.0)
            step_frobenius.append(0.0)
            continue
        rows = np.stack([c for c, _ in step])
        taus = np.array([tau for _, tau in step])
        ordered = _ordered_product(_generators(rows), taus, dim)
        integrated = taus @ rows
        averaged = expm_neg_i(reconstruct(integrated, basis), 1.0)
        step_killing.append(killing_geodesic_distance(ordered, averaged))
        step_frobenius.append(frobenius_norm(ordered - averaged))

        terms = [
            integrated[i] * basis.matrix(i)
            for i in np.flatnonzero(np.abs(integrated) > 0.0)
        ]
        trotterized = np.eye(dim, dtype=np.complex128)
        for term in terms:
            trotterized = expm_neg_i(term, 1.0) @ trotterized
        trotter_estimate += trotter_leading(terms, 1.0)

        averaged_final = averaged @ averaged_final
        trotter_final = trotterized @ trotter_final

    try:
        per_step_bound: float | None = averaging_bound(N, delta)
        skip_note = ""
    except AveragingBoundPreconditionError as exc:
        per_step_bound = None
        skip_note = str(exc)
        logger.info("averaging bound skipped: %s", exc)

    def _bounded(name: str, empirical: float, bound: float | None, note: str = "") -> BoundCheck:
        holds = None if bound is None else empirical <= bound + BOUND_ATOL
        return BoundCheck(name, float(empirical), bound, holds, note)

    checks = (
        prune_check,
        _bounded("averaging_step", max(step_killing), per_step_bound, skip_note),
        _bounded(
            "averaging_total",
            killing_geodesic_distance(pruned_final, averaged_final),
            None if per_step_bound is None else S * per_step_bound,
            skip_note,
        ),
        _bounded(
            "averaging_frobenius_step",
            max(step_frobenius),
            averaging_frobenius_bound(N, delta),
        ),
        BoundCheck(
            "trotter_total",
            killing_geodesic_distance(averaged_final, trotter_final),
            trotter_estimate,
            None,
            "leading order only",
        ),
    )
    for check in checks:
        if check.holds is False:
            logger.error(
                "%s bound violated: empirical %.6g > bound %.6g",
                check.name,
                check.empirical,
                check.bound,
            )

    report = BoundReport(
        pruning_bound=prune_check.bound,
        averaging_bound=per_step_bound,
        trotter_leading=trotter_estimate,
        cutoff=float(cutoff),
        delta=delta,
        active_terms=pruned.active,
        steps=S,
    )
    return EmpiricalBoundCheck(report=report, checks=checks)


def random_channels(rng: np.random.Generator, n: int, channels: int) -> HamiltonianSet:
    """Traceless Hermitian channels with unit normalised Frobenius norm."""
    dim = 2**n
    members = []
    for _ in range(channels):
        h = random_hermitian(rng, dim, traceless=True)
        members.append(h / frobenius_norm(h))
    return HamiltonianSet(members)


def random_schedule(
    rng: np.random.Generator, channels: int, steps: int, dt: float, h_max: float
) -> ControlSchedule:
    values = rng.uniform(-1.0, 1.0, size=(steps, channels)) * h_max
    return ControlSchedule(dt, ControlSchedule.project(values, h_max), h_max)


def sample_bound_checks(
    penalty: PenaltyMatrix,
    cutoff: float,
    S: int,
    count: int,
    seed: int,
    channels: int = 2,
    steps: int = 8,
    dt: float = 0.05,
    h_max: float = 1.0,
    workers: int = 1,
) -> list[EmpiricalBoundCheck]:
    """
    Run `empirical_bound_check` on `count` random noise-free paths.

    Path i draws its channels and controls from default_rng([seed, i]), so
    results do not depend on `workers`.
    """
    n = penalty.basis.n

    def _one(index: int) -> EmpiricalBoundCheck:
        rng = np.random.default_rng([seed, index])
        hset = random_channels(rng, n, channels)
        schedule = random_schedule(rng, channels, steps, dt, h_max)
        return empirical_bound_check(schedule, None, hset, penalty, cutoff, S)

    if workers <= 1:
        return [_one(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, range(count)))
