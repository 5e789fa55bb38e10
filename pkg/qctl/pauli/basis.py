from __future__ import annotations

import threading
from functools import reduce
from itertools import product
from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
from scipy.special import comb

from qctl.linalg import ComplexMatrix, HermitianMatrix, as_square, check_hermitian
from qctl.linalg.matrices import MAX_QUBITS

SYMBOLS = ("1", "x", "y", "z")

_SINGLE = {
    "1": np.eye(2, dtype=np.complex128),
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

TRACE_TOL = 1e-10


def pauli_matrix(symbol: str) -> ComplexMatrix:
    """Single-qubit factor for one of '1', 'x', 'y', 'z'."""
    key = normalize_symbol(symbol)
    return _SINGLE[key].copy()


def normalize_symbol(symbol: str) -> str:
    key = symbol.strip().lower()
    if key == "i":
        key = "1"
    if key not in _SINGLE:
        raise ValueError(f"unknown Pauli symbol {symbol!r}")
    return key


class PauliString(NamedTuple):
    """
    One element sigma_I of the generalized Pauli basis.

    Attributes:
        factors: Tuple of n symbols from {'1', 'x', 'y', 'z'}, first qubit first.
        index: Position in the basis ordering, 1-based (1 .. 4^n - 1).
        weight: Number of non-identity factors.
    """

    factors: tuple[str, ...]
    index: int
    weight: int

    @property
    def label(self) -> str:
        return "".join(self.factors)

    def matrix(self) -> ComplexMatrix:
        """Dense tensor product of the factors."""
        return reduce(np.kron, (_SINGLE[s] for s in self.factors))


class PauliBasis:
    """
    Generalized Pauli basis of su(2^n).

    Elements are ordered weight-major, then lexicographically in their factors
    ('1' < 'x' < 'y' < 'z'), so penalty vectors can be indexed by position.
    Dense matrices are built on first request and cached; cache fills are
    guarded by a lock so one basis can be shared across worker threads.
    """

    def __init__(self, n: int) -> None:
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
        self.n = n
        self.dim = 2**n

        ordered: list[tuple[str, ...]] = []
        for weight in range(1, n + 1):
            group = [
                factors
                for factors in product(SYMBOLS, repeat=n)
                if sum(s != "1" for s in factors) == weight
            ]
            ordered.extend(sorted(group))

        self.elements: tuple[PauliString, ...] = tuple(
            PauliString(factors=f, index=i + 1, weight=sum(s != "1" for s in f))
            for i, f in enumerate(ordered)
        )
        self._positions = {e.label: i for i, e in enumerate(self.elements)}
        self._cache: dict[int, ComplexMatrix] = {}
        self._stacked: np.ndarray | None = None
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.elements]

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.elements], dtype=int)

    def position(self, label: str) -> int:
        """0-based position of a label such as 'xz' or 'IX' (case-insensitive)."""
        key = "".join(normalize_symbol(s) for s in label)
        if key not in self._positions:
            raise ValueError(f"{label!r} is not an element of the {self.n}-qubit basis")
        return self._positions[key]

    def matrix(self, position: int) -> ComplexMatrix:
        """Dense matrix of the element at a 0-based position."""
        cached = self._cache.get(position)
        if cached is not None:
            return cached
        with self._lock:
            if position not in self._cache:
                self._cache[position] = self.elements[position].matrix()
            return self._cache[position]

    def stacked(self) -> np.ndarray:
        """All element matrices as one (4^n - 1, d, d) array. Intended for n <= 4."""
        if self._stacked is None:
            stack = np.stack([self.matrix(i) for i in range(len(self))])
            with self._lock:
                if self._stacked is None:
                    self._stacked = stack
        return self._stacked


class PauliExpansion(NamedTuple):
    """Coefficients of the traceless part and the separated traceful part Tr(H)/d."""

    coefficients: np.ndarray
    trace_part: float


def generate_basis(n: int) -> PauliBasis:
    """Build the 4^n - 1 element basis for n qubits."""
    return PauliBasis(n)


def count_weight(n: int, k: int) -> int:
    """Number of basis elements with weight k: C(n, k) 3^k."""
    if not 1 <= k <= n:
        raise ValueError(f"weight must be in [1, {n}], got {k}")
    return int(comb(n, k, exact=True)) * 3**k


def _check_dim(H: ComplexMatrix, basis: PauliBasis) -> None:
    if H.shape[0] != basis.dim:
        raise ValueError(
            f"dimension mismatch: matrix is {H.shape[0]}, basis expects {basis.dim}"
        )


def _coefficients(H: ComplexMatrix, basis: PauliBasis) -> np.ndarray:
    # Tr(H sigma_I) / d; sigma_I is Hermitian so this is sum(H * sigma_I^T) / d.
    if basis.n <= 4:
        values = np.einsum("ab,kba->k", H, basis.stacked())
    else:
        values = np.array(
            [np.sum(H * basis.matrix(i).T) for i in range(len(basis))]
        )
    return np.real(values) / basis.dim


def expand_with_trace(H: npt.ArrayLike, basis: PauliBasis) -> PauliExpansion:
    """Expand a Hermitian matrix, separating its traceful part."""
    matrix = check_hermitian(H, "operator")
    _check_dim(matrix, basis)
    trace_part = float(np.real(np.trace(matrix))) / basis.dim
    return PauliExpansion(_coefficients(matrix, basis), trace_part)


def expand(H: npt.ArrayLike, basis: PauliBasis) -> np.ndarray:
    """
    Real coefficients h_I = Tr(H sigma_I) / d of a Hermitian operator.

    Any multiple of the identity is excluded; use `expand_with_trace` when the
    traceful part is needed.
    """
    return expand_with_trace(H, basis).coefficients


def reconstruct(h: Sequence[float] | np.ndarray, basis: PauliBasis) -> HermitianMatrix:
    """Sum_I h_I sigma_I."""
    coefficients = np.asarray(h, dtype=float)
    if coefficients.shape != (len(basis),):
        raise ValueError(
            f"expected {len(basis)} coefficients, got shape {coefficients.shape}"
        )
    if basis.n <= 4:
        return np.einsum("k,kab->ab", coefficients, basis.stacked())
    out = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
    for i in np.flatnonzero(coefficients):
        out += coefficients[i] * basis.matrix(i)
    return out


def expansion_matrix(
    noisy_set: Sequence[npt.ArrayLike], basis: PauliBasis
) -> np.ndarray:
    """
    Matrix M with noisy_set[J] = sum_I M[I, J] sigma_I.

    Each member must be traceless Hermitian.
    """
    columns = []
    for j, member in enumerate(noisy_set):
        expansion = expand_with_trace(member, basis)
        if abs(expansion.trace_part) > TRACE_TOL:
            raise ValueError(f"noisy Hamiltonian {j} must be traceless")
        columns.append(expansion.coefficients)
    if not columns:
        return np.zeros((len(basis), 0))
    return np.column_stack(columns)


def weight_positions(basis: PauliBasis, weight: int) -> list[int]:
    """0-based positions of the elements with the given weight."""
    return [i for i, e in enumerate(basis.elements) if e.weight == weight]


def operator_from_labels(
    terms: dict[str, float], basis: PauliBasis
) -> HermitianMatrix:
    """Hermitian operator from {'label': weight}, e.g. {'x': 1.0} or {'zz': 0.5}."""
    out = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
    for label, weight in terms.items():
        if len(label) != basis.n:
            raise ValueError(
                f"label {label!r} has {len(label)} factors, expected {basis.n}"
            )
        out += float(weight) * basis.matrix(basis.position(label))
    return as_square(out)
