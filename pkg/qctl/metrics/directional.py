from __future__ import annotations

import numpy as np

from qctl.pauli import PauliBasis

from .base import PenaltyFamily


def _check_penalty(p: float) -> float:
    if not np.isfinite(p) or p < 1:
        raise ValueError("penalty p must be finite and at least 1")
    return float(p)


class SingleQubitZZ(PenaltyFamily):
    """
    One-qubit metric that makes the z direction costlier.

    Weight-based families are all flat for a single qubit, so one direction
    is singled out instead: (I_xx, I_yy, I_zz) = (1, 1, p).
    """

    name = "single_qubit_zz"

    def __init__(self, p: float = 1.0) -> None:
        self.p = _check_penalty(p)

    def check_qubits(self, n: int) -> None:
        if n != 1:
            raise ValueError(f"single_qubit_zz applies to n = 1 only, got n = {n}")

    def compute(self, basis: PauliBasis) -> np.ndarray:
        diag = np.ones(len(basis))
        diag[basis.position("z")] = self.p
        return diag

    def params(self) -> dict[str, float]:
        return {"p": self.p}


class TwoQubitWeight2(PenaltyFamily):
    """Two-qubit metric: 1 on local directions, p on every sigma_j (x) sigma_k."""

    name = "two_qubit_weight2"

    def __init__(self, p: float = 1.0) -> None:
        self.p = _check_penalty(p)

    def check_qubits(self, n: int) -> None:
        if n != 2:
            raise ValueError(f"two_qubit_weight2 applies to n = 2 only, got n = {n}")

    def compute(self, basis: PauliBasis) -> np.ndarray:
        return np.where(basis.weights == 2, self.p, 1.0)

    def params(self) -> dict[str, float]:
        return {"p": self.p}
