from __future__ import annotations

import math
from typing import Any, NamedTuple, Sequence

import numpy as np
import numpy.typing as npt

from qctl.linalg import check_hermitian, commutator, frobenius_norm
from qctl.metrics import PenaltyMatrix

NONZERO_ATOL = 1e-12


class AveragingBoundPreconditionError(ValueError):
    """The averaging bound needs delta < N^(-1/2)."""


class PrunedCoefficients(NamedTuple):
    """Coefficients with expensive directions removed, and how many remain nonzero."""

    coefficients: np.ndarray
    active: int


class BoundReport(NamedTuple):
    """
    The three approximation error bounds for one path.

    Attributes:
        pruning_bound: Killing error bound from dropping directions with I_II >= cutoff.
        averaging_bound: Per-step averaging bound pi sqrt(N) delta^2, None when
                         delta >= N^(-1/2).
        trotter_leading: Leading-order trotterization error, summed over steps.
        cutoff: Penalty cutoff.
        delta: Killing length of one averaging step.
        active_terms: N, the nonzero retained Pauli directions.
        steps: S, the number of averaging steps.
    """

    pruning_bound: float
    averaging_bound: float | None
    trotter_leading: float
    cutoff: float
    delta: float
    active_terms: int
    steps: int

    def to_dict(self) -> dict[str, Any]:
        return self._asdict()


def prune(h: npt.ArrayLike, penalty: PenaltyMatrix, cutoff: float) -> PrunedCoefficients:
    """Keep h_I where I_II < cutoff, zero the rest."""
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    coefficients = np.asarray(h, dtype=float)
    if coefficients.shape[-1] != penalty.diag.size:
        raise ValueError(
            f"expected {penalty.diag.size} coefficients, got shape {coefficients.shape}"
        )
    kept = np.where(penalty.diag < cutoff, coefficients, 0.0)
    nonzero = np.abs(kept) > NONZERO_ATOL
    active = int(np.count_nonzero(nonzero.any(axis=0) if kept.ndim > 1 else nonzero))
    return PrunedCoefficients(kept, active)


def pruning_bound(gamma_path: Sequence[float] | np.ndarray, dt: float, cutoff: float) -> float:
    """
    Killing-distance bound on the error of pruning.

    The calculation:
        sum_k Gamma_k dt / sqrt(cutoff),  Gamma_k = sqrt(g_k)
    """
    gammas = np.asarray(gamma_path, dtype=float)
    if np.any(gammas < 0):
        raise ValueError("gamma values must be non-negative")
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    if math.isinf(cutoff):
        return 0.0
    return float(np.sum(gammas) * dt / math.sqrt(cutoff))


def _check_terms(N: int, delta: float) -> None:
    if N < 1:
        raise ValueError("N must be at least 1")
    if delta < 0:
        raise ValueError("delta must be non-negative")


def averaging_bound(N: int, delta: float) -> float:
    """
    Killing error of replacing one ordered step by its averaged exponential.

    Valid only for delta < N^(-1/2); raises AveragingBoundPreconditionError
    otherwise.
    """
    _check_terms(N, delta)
    if delta >= N ** -0.5:
        raise AveragingBoundPreconditionError(
            f"averaging bound needs delta < N^(-1/2) = {N ** -0.5:.6g}, got delta = {delta:g}"
        )
    return math.pi * math.sqrt(N) * delta**2


def averaging_frobenius_bound(N: int, delta: float) -> float:
    """Frobenius averaging bound 2 (e^(sqrt(N) delta) - 1 - sqrt(N) delta) / sqrt(N), any delta."""
    _check_terms(N, delta)
    x = math.sqrt(N) * delta
    return 2.0 * (math.expm1(x) - x) / math.sqrt(N)


def trotter_leading(terms: Sequence[npt.ArrayLike], delta: float) -> float:
    """
    Leading-order error of applying the terms one after another.

    The calculation:
        || 1/2 sum_I sum_{J<I} [H_I, H_J] ||_F * delta^2

    Higher orders in delta are not included.
    """
    matrices = [check_hermitian(t, f"term {i}") for i, t in enumerate(terms)]
    if not matrices:
        return 0.0
    total = np.zeros_like(matrices[0])
    for i, h_i in enumerate(matrices):
        for h_j in matrices[:i]:
            total = total + commutator(h_i, h_j)
    return frobenius_norm(0.5 * total) * delta**2


def product_norm_bound(hamiltonians: Sequence[npt.ArrayLike], N: int) -> float:
    """N^((m-1)/2) prod_i ||H_i||_F, an upper bound on ||H_1 ... H_m||_F."""
    if not hamiltonians:
        raise ValueError("need at least one operator")
    if N < 1:
        raise ValueError("N must be at least 1")
    norms = [frobenius_norm(h) for h in hamiltonians]
    return float(N ** ((len(norms) - 1) / 2) * np.prod(norms))
