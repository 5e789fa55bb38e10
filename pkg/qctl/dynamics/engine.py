from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import pandas as pd

from qctl.linalg import (
    UnitaryMatrix,
    as_square,
    expm_neg_i_batch,
    sup_distance,
    trace_phase_distances,
)
from qctl.linalg.matrices import UNITARY_ATOL
from qctl.noise import NoiseRealization, ScenarioSet
from qctl.pauli import pauli_matrix

from .schedule import (
    ControlSchedule,
    HamiltonianSet,
    Segments,
    effective_hamiltonians,
    segments,
)

logger = logging.getLogger(__name__)


class Trajectory(NamedTuple):
    """
    Grid samples of U(t_k; xi) for one realization.

    Attributes:
        times: Grid times t_0 .. t_K.
        unitaries: (K + 1, d, d) array with unitaries[0] = identity.
        hitting_time: First grid time within eta of a target, once computed.
        step_costs: Optional per-step metric cost g_k.
        realization: The realization that was propagated (None = noise free).
    """

    times: np.ndarray
    unitaries: np.ndarray
    hitting_time: float | None = None
    step_costs: np.ndarray | None = None
    realization: NoiseRealization | None = None

    @property
    def final(self) -> UnitaryMatrix:
        return self.unitaries[-1]

    def to_frame(self) -> pd.DataFrame:
        """
        Matrix CSV layout: one row per grid time, column t, then row-major
        (re, im) pairs u_<row>_<col>_re, u_<row>_<col>_im.
        """
        steps, dim, _ = self.unitaries.shape
        flat = self.unitaries.reshape(steps, dim * dim)
        columns: dict[str, np.ndarray] = {"t": self.times}
        for idx in range(dim * dim):
            r, c = divmod(idx, dim)
            columns[f"u_{r}_{c}_re"] = flat[:, idx].real
            columns[f"u_{r}_{c}_im"] = flat[:, idx].imag
        return pd.DataFrame(columns)


class StatePath(NamedTuple):
    """psi(t_k) = U(t_k) psi0, plus Bloch coordinates for a single qubit."""

    times: np.ndarray
    states: np.ndarray
    bloch: np.ndarray | None

    def to_frame(self) -> pd.DataFrame:
        """Bloch CSV layout: t, bx, by, bz."""
        if self.bloch is None:
            raise ValueError("Bloch coordinates exist only for a single qubit")
        return pd.DataFrame(
            {
                "t": self.times,
                "bx": self.bloch[:, 0],
                "by": self.bloch[:, 1],
                "bz": self.bloch[:, 2],
            }
        )


class ChanceEstimate(NamedTuple):
    """
    Monte-Carlo estimate of P[U enters the eta-ball of the target].

    Attributes:
        success_fraction: Fraction of scenarios with a hitting time.
        hitting_times: Per-scenario hitting times; misses are censored at the
                       schedule horizon.
        hit: Per-scenario flag, False where the time is censored.
    """

    success_fraction: float
    hitting_times: np.ndarray
    hit: np.ndarray


def propagate(
    schedule: ControlSchedule,
    realization: NoiseRealization | None,
    hset: HamiltonianSet,
) -> Trajectory:
    """
    Integrate dU/dt = -i H(t; xi) U exactly for piecewise-constant controls.

    Every grid interval is split at interior noise jumps; on each piece the
    generator is constant, so U <- exp(-i H tau) U is exact. Raises
    RuntimeError if any recorded unitary drifts more than 1e-9 from unitarity.
    """
    if schedule.channels != hset.channels:
        raise ValueError(
            f"schedule has {schedule.channels} channels, Hamiltonian set has {hset.channels}"
        )
    pieces = segments(schedule, realization)
    unitaries = propagate_segments(pieces, schedule.steps, hset)

    gram = np.einsum("kba,kbc->kac", unitaries.conj(), unitaries)
    drift = np.max(np.abs(gram - np.eye(hset.dim)), axis=(1, 2))
    if np.any(drift > UNITARY_ATOL):
        worst = int(np.argmax(drift))
        raise RuntimeError(
            f"unitarity drift {drift[worst]:.3e} at t = {schedule.times[worst]:.6g} "
            f"exceeds {UNITARY_ATOL:g}"
        )

    return Trajectory(times=schedule.times, unitaries=unitaries, realization=realization)


def propagate_segments(pieces: Segments, steps: int, hset: HamiltonianSet) -> np.ndarray:
    """
    Grid unitaries (steps + 1, d, d) from precomputed segments.

    Segments depend on the controls only through `controls`, so callers that
    re-evaluate many control grids against one realization can swap that
    field and skip re-splitting the grid.
    """
    generators = effective_hamiltonians(pieces.controls, pieces.alphas, hset)
    factors = expm_neg_i_batch(generators, pieces.durations)

    # A grid point is recorded after the last piece of each step.
    step_ends = np.append(pieces.step_index[1:] != pieces.step_index[:-1], True)

    dim = hset.dim
    unitaries = np.empty((steps + 1, dim, dim), dtype=np.complex128)
    current = np.eye(dim, dtype=np.complex128)
    unitaries[0] = current
    k = 1
    for factor, is_end in zip(factors, step_ends):
        current = factor @ current
        if is_end:
            unitaries[k] = current
            k += 1
    return unitaries


def hitting_time(
    traj: Trajectory,
    target: npt.ArrayLike,
    eta: float,
    phase_invariant: bool = False,
) -> float | None:
    """
    First grid time t_k with sup_distance(U(t_k), target) <= eta, else None.

    For the phase-invariant distance the trace-phase value is tried first;
    the 1-D phase refinement runs only where the Frobenius lower bound does
    not already rule the grid point out.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    index = first_hit_index(traj.unitaries, as_square(target), eta, phase_invariant)
    return None if index is None else float(traj.times[index])


def first_hit_index(
    unitaries: np.ndarray, target: np.ndarray, eta: float, phase_invariant: bool
) -> int | None:
    if not phase_invariant:
        distances = np.max(np.abs(unitaries - target), axis=(1, 2))
        hits = np.flatnonzero(distances <= eta)
        return int(hits[0]) if hits.size else None

    upper, lower = trace_phase_distances(unitaries, target)
    for k in np.flatnonzero(lower <= eta):
        if upper[k] <= eta or sup_distance(unitaries[k], target, True) <= eta:
            return int(k)
    return None


def apply_to_state(traj: Trajectory, psi0: npt.ArrayLike) -> StatePath:
    """Evolve a normalised state along the trajectory."""
    psi = np.asarray(psi0, dtype=np.complex128).reshape(-1)
    dim = traj.unitaries.shape[1]
    if psi.size != dim:
        raise ValueError(f"state has dimension {psi.size}, trajectory has {dim}")
    if not np.isclose(np.linalg.norm(psi), 1.0, rtol=0.0, atol=1e-12):
        raise ValueError("initial state must have unit norm")

    states = traj.unitaries @ psi
    bloch = None
    if dim == 2:
        bloch = np.column_stack(
            [
                np.real(np.einsum("ka,ab,kb->k", states.conj(), pauli_matrix(s), states))
                for s in ("x", "y", "z")
            ]
        )
    return StatePath(times=traj.times, states=states, bloch=bloch)


def _scenario_hit(
    schedule: ControlSchedule,
    realization: NoiseRealization | None,
    hset: HamiltonianSet,
    target: np.ndarray,
    eta: float,
    phase_invariant: bool,
) -> float | None:
    traj = propagate(schedule, realization, hset)
    return hitting_time(traj, target, eta, phase_invariant)


def scenario_hitting_times(
    schedule: ControlSchedule,
    scenarios: ScenarioSet | list[NoiseRealization | None],
    hset: HamiltonianSet,
    target: npt.ArrayLike,
    eta: float,
    phase_invariant: bool = False,
    workers: int = 1,
) -> list[float | None]:
    """Hitting time per scenario, in scenario order regardless of `workers`."""
    goal = as_square(target)
    realizations = list(scenarios)

    def _one(realization: NoiseRealization | None) -> float | None:
        return _scenario_hit(schedule, realization, hset, goal, eta, phase_invariant)

    if workers <= 1 or len(realizations) == 1:
        return [_one(r) for r in realizations]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, realizations))


def chance_estimate(
    schedule: ControlSchedule,
    scenarios: ScenarioSet,
    hset: HamiltonianSet,
    target: npt.ArrayLike,
    eta: float,
    phase_invariant: bool = False,
    workers: int = 1,
) -> ChanceEstimate:
    """Empirical P[hit] over a scenario set, with censored hitting times."""
    times = scenario_hitting_times(
        schedule, scenarios, hset, target, eta, phase_invariant, workers
    )
    hit = np.array([t is not None for t in times], dtype=bool)
    censored = np.array(
        [schedule.horizon if t is None else t for t in times], dtype=float
    )
    fraction = float(np.mean(hit))
    logger.debug(
        "chance estimate: %d/%d scenarios hit", int(hit.sum()), len(times)
    )
    return ChanceEstimate(success_fraction=fraction, hitting_times=censored, hit=hit)
