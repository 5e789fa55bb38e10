from __future__ import annotations

import logging
import math

import numpy as np

from qctl.dynamics import ControlSchedule
from qctl.linalg import (
    expm_neg_i_batch,
    frobenius_norm,
    phase_aligned_generator,
    sup_distance,
)
from qctl.metrics import channel_expansions
from qctl.pauli import PauliBasis, expand

from .objective import OCPProblem

logger = logging.getLogger(__name__)


def target_drive(problem: OCPProblem) -> np.ndarray:
    """
    Total drive vector h with sum_j h_j H_hat_j closest to the target generator.

    The generator is the phase-aligned logarithm of the target; its Pauli
    expansion is projected onto the span of the intended channels by least
    squares. Applying h / T for a duration T reaches the target exactly when
    the channels span the generator.
    """
    generator, _ = phase_aligned_generator(problem.target, problem.phase_invariant)
    basis = PauliBasis(problem.hset.n)
    clean, _ = channel_expansions(problem.hset, basis)
    drive, *_ = np.linalg.lstsq(clean.T, expand(generator, basis), rcond=None)
    return drive


def constant_drive(drive: np.ndarray, problem: OCPProblem, steps: int | None = None) -> np.ndarray:
    """
    Spread a total drive over the fewest grid steps the control bound allows.

    With `steps` the drive is spread over exactly that many steps instead and
    projected onto the control ball. Remaining steps are zero.
    """
    values = np.zeros((problem.steps, problem.channels))
    size = float(np.linalg.norm(drive))
    if size == 0.0:
        return values
    if steps is None:
        steps = math.ceil(size / (problem.h_max * problem.dt) - 1e-9)
    steps = max(1, min(steps, problem.steps))
    values[:steps] = drive / (steps * problem.dt)
    return ControlSchedule.project(values, problem.h_max)


def geodesic_warm_start(problem: OCPProblem) -> np.ndarray:
    """Constant control along the projected target generator, then zero."""
    return constant_drive(target_drive(problem), problem)


def geodesic_step_bound(problem: OCPProblem) -> int:
    """
    Steps below which no schedule can reach the target.

    The Killing speed of sum_j h_j H_hat_j is at most h_max times the largest
    singular value of the channel expansion matrix, and the path must cover
    the (phase-minimised) geodesic distance to the target.
    """
    generator, _ = phase_aligned_generator(problem.target, problem.phase_invariant)
    distance = frobenius_norm(generator)
    basis = PauliBasis(problem.hset.n)
    clean, _ = channel_expansions(problem.hset, basis)
    speed = problem.h_max * float(np.linalg.norm(clean, 2))
    if speed == 0.0:
        return problem.steps
    return int(math.floor(distance / (speed * problem.dt)))


def _fidelity(overlap: np.ndarray | complex, dim: int, phase_invariant: bool) -> np.ndarray:
    if phase_invariant:
        return np.abs(overlap) ** 2 / dim**2
    return np.real(overlap) / dim


def nominal_fidelity_gradient(
    values: np.ndarray, problem: OCPProblem, fd_step: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Noise-free fidelity of a control grid and its central-difference gradient.

    Shifting step k changes only that step's factor, so with prefix
    products P_k and suffix products S_k the shifted overlap is
    Tr(W^dagger S_{k+1} X P_k) = Tr(A_k X) with A_k = P_k W^dagger S_{k+1}.
    All 2 * K * m shifted exponentials are evaluated in one batch.

    Returns:
        (fidelity, gradient of shape values.shape, final unitary)
    """
    hset = problem.hset
    dim = hset.dim
    steps, channels = values.shape
    generators = np.einsum("kj,jab->kab", values, hset.clean)
    factors = expm_neg_i_batch(generators, np.full(steps, problem.dt))

    prefix = np.empty((steps + 1, dim, dim), dtype=np.complex128)
    suffix = np.empty_like(prefix)
    prefix[0] = np.eye(dim)
    suffix[steps] = np.eye(dim)
    for k in range(steps):
        prefix[k + 1] = factors[k] @ prefix[k]
    for k in range(steps - 1, -1, -1):
        suffix[k] = suffix[k + 1] @ factors[k]

    adjoint_target = problem.target.conj().T
    final = prefix[steps]
    fidelity = float(_fidelity(np.trace(adjoint_target @ final), dim, problem.phase_invariant))

    anchors = prefix[:steps] @ adjoint_target @ suffix[1:]
    shifts = fd_step * hset.clean
    shifted = np.concatenate(
        [
            (generators[:, None] + shifts[None]).reshape(-1, dim, dim),
            (generators[:, None] - shifts[None]).reshape(-1, dim, dim),
        ]
    )
    shifted_factors = expm_neg_i_batch(shifted, np.full(len(shifted), problem.dt))
    plus, minus = np.split(shifted_factors.reshape(2, steps, channels, dim, dim), 2)
    overlap_plus = np.einsum("kab,kjba->kj", anchors, plus[0])
    overlap_minus = np.einsum("kab,kjba->kj", anchors, minus[0])
    gradient = (
        _fidelity(overlap_plus, dim, problem.phase_invariant)
        - _fidelity(overlap_minus, dim, problem.phase_invariant)
    ) / (2.0 * fd_step)
    return fidelity, gradient, final


def _ascend(
    initial: np.ndarray,
    problem: OCPProblem,
    tolerance: float,
    iterations: int,
    fd_step: float,
) -> tuple[np.ndarray, bool]:
    values = ControlSchedule.project(initial, problem.h_max)
    fidelity, gradient, final = nominal_fidelity_gradient(values, problem, fd_step)
    step = 1.0 / problem.dt
    for _ in range(iterations):
        if sup_distance(final, problem.target, problem.phase_invariant) <= tolerance:
            return values, True
        while step > 1e-12:
            candidate = ControlSchedule.project(values + step * gradient, problem.h_max)
            result = nominal_fidelity_gradient(candidate, problem, fd_step)
            if result[0] > fidelity:
                values = candidate
                fidelity, gradient, final = result
                step *= 1.5
                break
            step *= 0.5
        else:
            break
    return values, sup_distance(final, problem.target, problem.phase_invariant) <= tolerance


def nominal_warm_start(
    problem: OCPProblem,
    iterations: int = 300,
    margin: float = 0.5,
    fd_step: float = 1e-6,
    seed: int = 0,
) -> np.ndarray | None:
    """
    Shortest noise-free schedule found by fidelity ascent with bisection on length.

    For a candidate length K the first K steps are optimised for noise-free
    fidelity (projected ascent with central differences) until the final
    distance is within `margin * eta`; remaining steps stay zero. K is bisected
    between the geodesic step bound and the full grid.

    Returns:
        A (steps, channels) control grid, or None if the full grid is not
        enough.
    """
    tolerance = margin * problem.eta
    drive = target_drive(problem)

    def _solve(length: int) -> tuple[np.ndarray, bool]:
        rng = np.random.default_rng([seed, length])
        start = constant_drive(drive, problem, length)[:length]
        start = start + 0.1 * problem.h_max * rng.standard_normal(start.shape)
        values, ok = _ascend(start, problem, tolerance, iterations, fd_step)
        logger.debug("nominal ascent with %d steps: %s", length, "feasible" if ok else "infeasible")
        return values, ok

    best, feasible = _solve(problem.steps)
    if not feasible:
        logger.warning(
            "nominal warm start could not reach the target within %d steps", problem.steps
        )
        return None

    low = max(0, min(geodesic_step_bound(problem) - 1, problem.steps - 1))
    high = problem.steps
    while high - low > 1:
        middle = (low + high) // 2
        values, ok = _solve(middle)
        if ok:
            high, best = middle, values
        else:
            low = middle

    grid = np.zeros((problem.steps, problem.channels))
    grid[:high] = best
    logger.info("nominal warm start reaches the target in %d steps", high)
    return grid
