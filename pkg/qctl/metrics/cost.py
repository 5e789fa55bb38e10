from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt

from qctl.dynamics.engine import Trajectory
from qctl.dynamics.schedule import ControlSchedule, HamiltonianSet, Segments, segments
from qctl.noise import NoiseRealization
from qctl.pauli import PauliBasis, expand, expansion_matrix

from .base import PenaltyMatrix

DIRECTION_ATOL = 1e-12


class NoisyCostComparison(NamedTuple):
    """Closed-form noisy cost next to the expansion oracle."""

    closed_form: float
    oracle: float
    discrepancy: float


def metric_cost_clean(h: npt.ArrayLike, penalty: PenaltyMatrix) -> float:
    """g(H, H) = sum_I I_II h_I^2 for a coefficient vector h."""
    coefficients = np.asarray(h, dtype=float)
    if coefficients.shape != penalty.diag.shape:
        raise ValueError(
            f"expected {penalty.diag.size} coefficients, got shape {coefficients.shape}"
        )
    return float(np.dot(penalty.diag, coefficients**2))


def _check_channel_vectors(
    h: npt.ArrayLike, alpha: npt.ArrayLike, channels: int
) -> tuple[np.ndarray, np.ndarray]:
    controls = np.asarray(h, dtype=float)
    bits = np.asarray(alpha, dtype=float)
    if controls.shape != (channels,) or bits.shape != (channels,):
        raise ValueError(
            f"expected {channels} control values and alpha bits, "
            f"got {controls.shape} and {bits.shape}"
        )
    return controls, bits


def metric_cost_noisy_oracle(
    h: npt.ArrayLike,
    alpha: npt.ArrayLike,
    clean_set: Sequence[npt.ArrayLike],
    noisy_set: Sequence[npt.ArrayLike],
    penalty: PenaltyMatrix,
) -> float:
    """
    Noisy metric cost by direct expansion.

    Forms H = sum_j h_j (alpha_j H_hat_j + (1 - alpha_j) H_breve_j), expands it in
    the penalty's basis and applies `metric_cost_clean`.
    """
    if len(clean_set) != len(noisy_set):
        raise ValueError(
            f"got {len(clean_set)} intended and {len(noisy_set)} erroneous Hamiltonians"
        )
    controls, bits = _check_channel_vectors(h, alpha, len(clean_set))
    dim = penalty.basis.dim
    effective = np.zeros((dim, dim), dtype=np.complex128)
    for h_j, a_j, clean, noisy in zip(controls, bits, clean_set, noisy_set):
        effective = effective + h_j * (
            a_j * np.asarray(clean, dtype=np.complex128)
            + (1.0 - a_j) * np.asarray(noisy, dtype=np.complex128)
        )
    return metric_cost_clean(expand(effective, penalty.basis), penalty)


def pauli_directions(clean_set: Sequence[npt.ArrayLike], basis: PauliBasis) -> list[int]:
    """
    Basis position I(j) of each intended Hamiltonian, which must be exactly one sigma_I.

    Raises ValueError for channels that are not a single Pauli direction or that
    repeat a direction.
    """
    directions: list[int] = []
    for j, member in enumerate(clean_set):
        coefficients = expand(member, basis)
        position = int(np.argmax(np.abs(coefficients)))
        one_hot = np.zeros_like(coefficients)
        one_hot[position] = 1.0
        if not np.allclose(coefficients, one_hot, rtol=0.0, atol=DIRECTION_ATOL):
            raise ValueError(f"control channel {j} is not aligned with a Pauli direction")
        if position in directions:
            raise ValueError(f"control channel {j} repeats direction {basis.labels[position]}")
        directions.append(position)
    return directions


def metric_cost_noisy_closed_form(
    h: npt.ArrayLike,
    alpha: npt.ArrayLike,
    M: npt.ArrayLike,
    penalty: PenaltyMatrix,
    directions: Sequence[int] | None = None,
) -> float:
    """
    Noisy cost from the closed three-term sum over basis indices.

    The calculation:
        g = sum_I I_II (alpha_I h_I)^2
          + 2 sum_I sum_{J != I} I_II alpha_I (1 - alpha_J) h_I h_J M_IJ
          + sum_{I,J,K} I_II (1 - alpha_I)(1 - alpha_J) h_I h_J M_KI M_KJ

    The third term is kept with I_II under the free K sum, as written. Compare
    against `metric_cost_noisy_oracle` with `compare_noisy_costs`.

    Args:
        h: Controls, one per channel.
        alpha: Noise bits, one per channel.
        M: Expansion matrix, one column per channel (see `expansion_matrix`).
        penalty: Penalty matrix over the basis.
        directions: Basis position driven by each channel. When omitted, h and
                    alpha must already be indexed by the whole basis.

    Returns:
        The closed-form cost.
    """
    size = len(penalty.basis)
    expansion = np.asarray(M, dtype=float)
    if directions is None:
        directions = list(range(size))
    controls, bits = _check_channel_vectors(h, alpha, len(directions))
    if expansion.shape != (size, len(directions)):
        raise ValueError(
            f"expansion matrix must be ({size}, {len(directions)}), got {expansion.shape}"
        )
    if len(set(directions)) != len(directions):
        raise ValueError("channel directions must be distinct")

    # Embed channel-indexed quantities into basis-indexed ones; undriven
    # directions carry h_I = 0 and drop out of every term.
    h_full = np.zeros(size)
    alpha_full = np.ones(size)
    M_full = np.zeros((size, size))
    h_full[directions] = controls
    alpha_full[directions] = bits
    M_full[:, directions] = expansion

    weights = penalty.diag
    intended = alpha_full * h_full
    erroneous = (1.0 - alpha_full) * h_full
    off_diagonal = M_full - np.diag(np.diag(M_full))

    first = np.dot(weights, intended**2)
    second = 2.0 * np.dot(weights * intended, off_diagonal @ erroneous)
    third = np.dot(weights * erroneous, M_full.T @ (M_full @ erroneous))
    return float(first + second + third)


def compare_noisy_costs(
    h: npt.ArrayLike,
    alpha: npt.ArrayLike,
    clean_set: Sequence[npt.ArrayLike],
    noisy_set: Sequence[npt.ArrayLike],
    penalty: PenaltyMatrix,
) -> NoisyCostComparison:
    """Evaluate both noisy costs for Pauli-aligned controls."""
    directions = pauli_directions(clean_set, penalty.basis)
    M = expansion_matrix(noisy_set, penalty.basis)
    closed_form = metric_cost_noisy_closed_form(h, alpha, M, penalty, directions)
    oracle = metric_cost_noisy_oracle(h, alpha, clean_set, noisy_set, penalty)
    return NoisyCostComparison(
        closed_form=closed_form, oracle=oracle, discrepancy=abs(closed_form - oracle)
    )


def channel_expansions(hset: HamiltonianSet, basis: PauliBasis) -> tuple[np.ndarray, np.ndarray]:
    """(m, N) coefficient rows of the intended and erroneous channel Hamiltonians."""
    if hset.dim != basis.dim:
        raise ValueError(f"dimension mismatch: set is {hset.dim}, basis expects {basis.dim}")
    clean = np.stack([expand(member, basis) for member in hset.clean])
    noisy = np.stack([expand(member, basis) for member in hset.noisy])
    return clean, noisy


def segment_coefficients(
    schedule: ControlSchedule,
    realization: NoiseRealization | None,
    hset: HamiltonianSet,
    basis: PauliBasis,
) -> tuple[Segments, np.ndarray]:
    """Jump-refined segments and the (S, N) Pauli coefficients of H on each."""
    pieces = segments(schedule, realization)
    clean, noisy = channel_expansions(hset, basis)
    # Expansion is linear, so sub-interval coefficients combine channel rows.
    coefficients = (pieces.controls * pieces.alphas) @ clean + (
        pieces.controls * (1.0 - pieces.alphas)
    ) @ noisy
    return pieces, coefficients


def _segment_speeds(
    schedule: ControlSchedule,
    realization: NoiseRealization | None,
    hset: HamiltonianSet,
    penalty: PenaltyMatrix,
) -> tuple[Segments, np.ndarray]:
    pieces, coefficients = segment_coefficients(schedule, realization, hset, penalty.basis)
    return pieces, np.sqrt(coefficients**2 @ penalty.diag)


def path_length(
    schedule: ControlSchedule,
    realization: NoiseRealization | None,
    hset: HamiltonianSet,
    penalty: PenaltyMatrix,
) -> float:
    """
    c(H, T) = integral of sqrt(g(H(t), H(t))) dt over the jump-refined grid.

    With no realization every channel applies its intended Hamiltonian.
    """
    pieces, speeds = _segment_speeds(schedule, realization, hset, penalty)
    return float(np.dot(speeds, pieces.durations))


def step_costs(
    schedule: ControlSchedule,
    realization: NoiseRealization | None,
    hset: HamiltonianSet,
    penalty: PenaltyMatrix,
) -> np.ndarray:
    """
    Per-step cost g_k, one per grid interval.

    sqrt(g_k) is the time-averaged speed over step k, so steps split by noise
    jumps still satisfy sum_k sqrt(g_k) dt = `path_length`.
    """
    pieces, speeds = _segment_speeds(schedule, realization, hset, penalty)
    per_step = np.bincount(
        pieces.step_index, weights=speeds * pieces.durations, minlength=schedule.steps
    )
    return (per_step / schedule.dt) ** 2


def with_step_costs(
    traj: Trajectory, schedule: ControlSchedule, hset: HamiltonianSet, penalty: PenaltyMatrix
) -> Trajectory:
    """Attach `step_costs` for the trajectory's own realization."""
    return traj._replace(step_costs=step_costs(schedule, traj.realization, hset, penalty))


def operator_complexity(
    schedule: ControlSchedule,
    hset: HamiltonianSet,
    penalty: PenaltyMatrix,
    steps: int | None = None,
) -> float:
    """
    Noise-free length of a synthesising schedule: an upper bound on C(U).

    Args:
        schedule: Schedule that reaches the target.
        hset: Control channels.
        penalty: Metric penalty.
        steps: Only count the first `steps` intervals, e.g. up to the hitting time.
    """
    if steps is not None:
        if not 1 <= steps <= schedule.steps:
            raise ValueError(f"steps must be in [1, {schedule.steps}], got {steps}")
        schedule = schedule.with_values(schedule.values[:steps])
    return path_length(schedule, None, hset, penalty)
