from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from qctl.pauli import PauliBasis


@dataclass(frozen=True)
class PenaltyMatrix:
    """
    Diagonal penalty I_II over a Pauli basis, in basis order.

    Attributes:
        basis: Basis the entries are indexed by.
        diag: One strictly positive entry per basis element.
        kind: Name of the family that produced it.
    """

    basis: PauliBasis
    diag: np.ndarray = field(repr=False)
    kind: str = "custom"

    def __post_init__(self) -> None:
        values = np.asarray(self.diag, dtype=float)
        if values.shape != (len(self.basis),):
            raise ValueError(
                f"penalty needs {len(self.basis)} entries, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("penalty entries must be finite and strictly positive")
        values.setflags(write=False)
        object.__setattr__(self, "diag", values)

    def by_label(self) -> dict[str, float]:
        return dict(zip(self.basis.labels, self.diag.tolist()))


class PenaltyFamily(ABC):
    """
    Abstract base class for penalty-matrix families.

    A family turns a Pauli basis into the diagonal weights I_II of a
    right-invariant metric. Directions that should be costly to move in get
    large entries; the Killing metric is the all-ones case.

    Subclasses implement `compute` and may override `check_qubits` when the
    family only makes sense for a particular register size.

    Example:
        class Flat(PenaltyFamily):
            name = "flat"

            def compute(self, basis: PauliBasis) -> np.ndarray:
                return np.full(len(basis), 2.0)
    """

    name: str = "penalty"

    def check_qubits(self, n: int) -> None:
        """Raise ValueError if the family does not apply to n qubits."""

    @abstractmethod
    def compute(self, basis: PauliBasis) -> np.ndarray:
        """
        Compute the diagonal penalty entries.

        Args:
            basis: Pauli basis fixing the order of the entries.

        Returns:
            Array with one positive entry per basis element.
        """
        raise NotImplementedError

    def params(self) -> dict[str, float]:
        return {}


def build_penalty(kind: PenaltyFamily, basis: PauliBasis) -> PenaltyMatrix:
    """Evaluate a penalty family on a basis."""
    kind.check_qubits(basis.n)
    return PenaltyMatrix(basis=basis, diag=kind.compute(basis), kind=kind.name)
