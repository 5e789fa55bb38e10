"""Generalized Pauli basis of su(2^n)."""

from .basis import (
    PauliBasis,
    PauliExpansion,
    PauliString,
    count_weight,
    expand,
    expand_with_trace,
    expansion_matrix,
    generate_basis,
    operator_from_labels,
    pauli_matrix,
    reconstruct,
    weight_positions,
)

__all__ = [
    "PauliBasis",
    "PauliExpansion",
    "PauliString",
    "count_weight",
    "expand",
    "expand_with_trace",
    "expansion_matrix",
    "generate_basis",
    "operator_from_labels",
    "pauli_matrix",
    "reconstruct",
    "weight_positions",
]
