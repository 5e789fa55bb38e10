from __future__ import annotations

import hashlib

import numpy as np
import pytest

from qctl.linalg import normalized_trace, random_hermitian
from qctl.pauli import (
    PauliBasis,
    count_weight,
    expand,
    expand_with_trace,
    expansion_matrix,
    operator_from_labels,
    pauli_matrix,
    reconstruct,
    weight_positions,
)

TWO_QUBIT_ORDER = "1x,1y,1z,x1,y1,z1,xx,xy,xz,yx,yy,yz,zx,zy,zz"
TWO_QUBIT_DIGEST = "eca99c637162115360468a1f36c0a3356e3045705983eab331edb6cc9354e0dc"


def _gram(basis: PauliBasis) -> np.ndarray:
    stack = basis.stacked()
    return np.real(np.einsum("iab,jba->ij", stack, stack)) / basis.dim


def test_single_qubit_basis_is_x_y_z() -> None:
    basis = PauliBasis(1)

    assert basis.labels == ["x", "y", "z"]
    np.testing.assert_array_equal(basis.matrix(1), pauli_matrix("y"))


def test_two_qubit_basis_has_fifteen_elements_in_golden_order() -> None:
    basis = PauliBasis(2)

    assert len(basis) == 15
    assert ",".join(basis.labels) == TWO_QUBIT_ORDER
    digest = hashlib.sha256(",".join(basis.labels).encode()).hexdigest()
    assert digest == TWO_QUBIT_DIGEST
    assert [e.index for e in basis] == list(range(1, 16))


def test_two_qubit_weight_counts() -> None:
    basis = PauliBasis(2)

    assert len(weight_positions(basis, 1)) == 6
    assert len(weight_positions(basis, 2)) == 9
    assert (count_weight(2, 1), count_weight(2, 2)) == (6, 9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_size_and_weight_sum(n: int) -> None:
    basis = PauliBasis(n)

    assert len(basis) == 4**n - 1
    assert sum(count_weight(n, k) for k in range(1, n + 1)) == 4**n - 1


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_weight_histogram_matches_count_weight(n: int) -> None:
    histogram = np.bincount(PauliBasis(n).weights, minlength=n + 1)[1:]

    assert list(histogram) == [count_weight(n, k) for k in range(1, n + 1)]


def test_four_qubit_weight_counts() -> None:
    assert [count_weight(4, k) for k in range(1, 5)] == [12, 54, 108, 81]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_is_orthonormal(n: int) -> None:
    np.testing.assert_allclose(_gram(PauliBasis(n)), np.eye(4**n - 1), atol=1e-12)


def test_elements_are_traceless_hermitian() -> None:
    basis = PauliBasis(2)

    for i in range(len(basis)):
        sigma = basis.matrix(i)
        np.testing.assert_allclose(sigma, sigma.conj().T)
        assert abs(normalized_trace(sigma)) < 1e-15


def test_position_accepts_identity_spellings() -> None:
    basis = PauliBasis(2)

    assert basis.position("IX") == basis.position("1x") == 0
    with pytest.raises(ValueError, match="not an element"):
        basis.position("11")


def test_basis_rejects_out_of_range_qubit_count() -> None:
    with pytest.raises(ValueError, match="qubit count"):
        PauliBasis(0)
    with pytest.raises(ValueError, match="qubit count"):
        PauliBasis(7)


def test_expand_then_reconstruct_recovers_traceless_operator() -> None:
    rng = np.random.default_rng(0)
    basis = PauliBasis(2)
    H = random_hermitian(rng, 4, traceless=True)

    np.testing.assert_allclose(reconstruct(expand(H, basis), basis), H, atol=1e-12)


def test_expand_separates_traceful_part() -> None:
    basis = PauliBasis(1)
    H = 2.0 * np.eye(2) + 0.5 * pauli_matrix("z")

    expansion = expand_with_trace(H, basis)

    np.testing.assert_allclose(expansion.coefficients, [0.0, 0.0, 0.5], atol=1e-15)
    assert expansion.trace_part == pytest.approx(2.0)


def test_expand_rejects_dimension_mismatch() -> None:
    with pytest.raises(ValueError, match="dimension mismatch"):
        expand(np.eye(4), PauliBasis(1))


def test_expand_rejects_non_hermitian() -> None:
    with pytest.raises(ValueError, match="Hermitian"):
        expand(np.array([[0, 1], [0, 0]]), PauliBasis(1))


def test_operator_from_labels() -> None:
    basis = PauliBasis(2)

    H = operator_from_labels({"zz": 0.5, "x1": 1.0}, basis)

    expected = 0.5 * np.kron(pauli_matrix("z"), pauli_matrix("z")) + np.kron(
        pauli_matrix("x"), np.eye(2)
    )
    np.testing.assert_allclose(H, expected)


def test_operator_from_labels_rejects_wrong_length() -> None:
    with pytest.raises(ValueError, match="factors"):
        operator_from_labels({"x": 1.0}, PauliBasis(2))


def test_expansion_matrix_columns() -> None:
    basis = PauliBasis(1)
    noisy = [pauli_matrix("x"), 0.6 * pauli_matrix("x") + 0.8 * pauli_matrix("z")]

    M = expansion_matrix(noisy, basis)

    np.testing.assert_allclose(M, [[1.0, 0.6], [0.0, 0.0], [0.0, 0.8]], atol=1e-15)


def test_expansion_matrix_rejects_traceful_member() -> None:
    with pytest.raises(ValueError, match="traceless"):
        expansion_matrix([np.eye(2)], PauliBasis(1))
