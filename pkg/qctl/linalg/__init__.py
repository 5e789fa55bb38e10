"""Dense complex matrix algebra for d = 2^n."""

from .matrices import (
    ComplexMatrix,
    GeodesicDistance,
    HermitianMatrix,
    UnitaryMatrix,
    as_square,
    check_hermitian,
    commutator,
    expm_neg_i,
    expm_neg_i_batch,
    frobenius_norm,
    geodesic_log_distance,
    is_hermitian,
    is_unitary,
    killing_geodesic_distance,
    min_phase_geodesic_distance,
    normalized_trace,
    operator_norm,
    phase_aligned_generator,
    qubit_count,
    random_hermitian,
    random_unitary,
    sup_distance,
    trace_phase_distances,
)

__all__ = [
    "ComplexMatrix",
    "GeodesicDistance",
    "HermitianMatrix",
    "UnitaryMatrix",
    "as_square",
    "check_hermitian",
    "commutator",
    "expm_neg_i",
    "expm_neg_i_batch",
    "frobenius_norm",
    "geodesic_log_distance",
    "is_hermitian",
    "is_unitary",
    "killing_geodesic_distance",
    "min_phase_geodesic_distance",
    "normalized_trace",
    "operator_norm",
    "phase_aligned_generator",
    "qubit_count",
    "random_hermitian",
    "random_unitary",
    "sup_distance",
    "trace_phase_distances",
]
