from __future__ import annotations

from abc import abstractmethod

import numpy as np

from qctl.pauli import PauliBasis, count_weight

from .base import PenaltyFamily


class WeightPenalty(PenaltyFamily):
    """
    Penalty that depends only on the weight k of each basis element.

    The full diagonal is I_II = I_k with k = weight(sigma_I); subclasses give
    the per-weight value I_k.
    """

    @abstractmethod
    def penalty_for_weight(self, k: int, n: int) -> float:
        raise NotImplementedError

    def compute(self, basis: PauliBasis) -> np.ndarray:
        table = {k: self.penalty_for_weight(k, basis.n) for k in range(1, basis.n + 1)}
        return np.array([table[w] for w in basis.weights], dtype=float)


class Killing(WeightPenalty):
    """Ordinary inner-product metric: I_IJ = delta_IJ."""

    name = "killing"

    def penalty_for_weight(self, k: int, n: int) -> float:
        return 1.0


class Cliff(WeightPenalty):
    """
    Cliff metric: free up to two-body terms, linear in weight above.

    The calculation:
        I_k = 1  for k in {1, 2}
        I_k = k  for k > 2
    """

    name = "cliff"

    def penalty_for_weight(self, k: int, n: int) -> float:
        return 1.0 if k <= 2 else float(k)


class Binomial(WeightPenalty):
    """
    Binomial metric: penalise a weight by how many directions carry it.

    The calculation:
        I_k(alpha) = (C(n, k) 3^k) ** alpha

    With alpha = 0 this is the Killing metric; alpha > 0 makes the crowded
    middle weights expensive.
    """

    name = "binomial"

    def __init__(self, alpha: float = 1.0) -> None:
        """
        Initialize the binomial family.

        Args:
            alpha: Exponent applied to the weight multiplicity. Must be finite
                   and nonnegative so every penalty stays at least 1.
        """
        if not np.isfinite(alpha) or alpha < 0:
            raise ValueError("alpha must be finite and nonnegative")
        self.alpha = float(alpha)

    def penalty_for_weight(self, k: int, n: int) -> float:
        return float(count_weight(n, k)) ** self.alpha

    def params(self) -> dict[str, float]:
        return {"alpha": self.alpha}


class Exponential(WeightPenalty):
    """Exponential metric: I_k(x) = x^(2k), x > 1."""

    name = "exponential"

    def __init__(self, x: float = 2.0) -> None:
        if not np.isfinite(x) or x <= 1:
            raise ValueError("exponential base x must be finite and greater than 1")
        self.x = float(x)

    def penalty_for_weight(self, k: int, n: int) -> float:
        return self.x ** (2 * k)

    def params(self) -> dict[str, float]:
        return {"x": self.x}
