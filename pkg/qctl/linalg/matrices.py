from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from scipy.linalg import schur
from scipy.optimize import minimize_scalar

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
HermitianMatrix = ComplexMatrix
UnitaryMatrix = ComplexMatrix

MAX_QUBITS = 6
HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-9
PHASE_XATOL = 1e-10
PHASE_GRID = 512
PHASE_REFINEMENTS = 16


class GeodesicDistance(NamedTuple):
    """
    Killing-metric distance between two unitaries.

    Attributes:
        value: Normalised Frobenius norm of the principal logarithm of U^dagger V.
        branch_ambiguous: True when an eigenphase of U^dagger V sits exactly on
                          pi, where the principal branch is not unique.
    """

    value: float
    branch_ambiguous: bool


def as_square(A: npt.ArrayLike) -> ComplexMatrix:
    """Return `A` as a finite complex square matrix or raise ValueError."""
    matrix = np.asarray(A, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix entries must be finite")
    return matrix


def qubit_count(A: npt.ArrayLike) -> int:
    """Number of qubits n for a 2^n x 2^n matrix, 1 <= n <= 6."""
    dim = as_square(A).shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim or n > MAX_QUBITS:
        raise ValueError(
            f"dimension must be 2^n with 1 <= n <= {MAX_QUBITS}, got {dim}"
        )
    return n


def is_hermitian(A: npt.ArrayLike) -> bool:
    """True when max|A - A^dagger| <= 1e-12 * max|A|."""
    matrix = as_square(A)
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    drift = float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0
    return drift <= HERMITIAN_RTOL * scale


def is_unitary(U: npt.ArrayLike, atol: float = UNITARY_ATOL) -> bool:
    """True when max|U^dagger U - I| <= atol."""
    matrix = as_square(U)
    gram = matrix.conj().T @ matrix
    return float(np.max(np.abs(gram - np.eye(matrix.shape[0])))) <= atol


def check_hermitian(A: npt.ArrayLike, name: str = "matrix") -> HermitianMatrix:
    matrix = as_square(A)
    if not is_hermitian(matrix):
        raise ValueError(f"{name} must be Hermitian")
    return matrix


def expm_neg_i(H: npt.ArrayLike, t: float) -> UnitaryMatrix:
    """
    Return exp(-iHt) for Hermitian H.

    The exponential is taken in the eigenbasis of H, so the result is unitary
    up to eigensolver error rather than truncation error:

        H = V diag(e) V^dagger
        exp(-iHt) = V diag(exp(-i e t)) V^dagger

    Args:
        H: Hermitian generator.
        t: Finite time.

    Returns:
        The unitary exp(-iHt).
    """
    matrix = check_hermitian(H, "generator")
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    energies, vectors = np.linalg.eigh(matrix)
    phases = np.exp(-1j * energies * t)
    return (vectors * phases) @ vectors.conj().T


def expm_neg_i_batch(H: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """
    Exponentiate a stack of Hermitian generators, exp(-i H[k] taus[k]).

    No validation: callers pass generators assembled from already validated
    Hamiltonian sets.
    """
    energies, vectors = np.linalg.eigh(H)
    phases = np.exp(-1j * energies * np.asarray(taus, dtype=float)[:, None])
    return (vectors * phases[:, None, :]) @ np.conj(np.swapaxes(vectors, -1, -2))


def normalized_trace(A: npt.ArrayLike) -> complex:
    """Trace normalised so that Tr[1] = 1."""
    matrix = as_square(A)
    return complex(np.trace(matrix) / matrix.shape[0])


def frobenius_norm(A: npt.ArrayLike) -> float:
    """Frobenius norm under the normalised trace; the identity has norm 1."""
    matrix = as_square(A)
    return float(np.sqrt(np.sum(np.abs(matrix) ** 2) / matrix.shape[0]))


def operator_norm(A: npt.ArrayLike) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(as_square(A), 2))


def commutator(A: npt.ArrayLike, B: npt.ArrayLike) -> ComplexMatrix:
    a = as_square(A)
    b = as_square(B)
    return a @ b - b @ a


def _check_pair(U: npt.ArrayLike, V: npt.ArrayLike) -> tuple[ComplexMatrix, ComplexMatrix]:
    u = as_square(U)
    v = as_square(V)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return u, v


def _max_entry(A: np.ndarray) -> float:
    return float(np.max(np.abs(A)))


def sup_distance(
    U: npt.ArrayLike, V: npt.ArrayLike, phase_invariant: bool = False
) -> float:
    """
    Entrywise max-modulus distance between two unitaries.

    With `phase_invariant`, the distance is minimised over a global phase on U.
    The envelope max_ij |e^{i phi} u_ij - v_ij| can have several local minima,
    so it is first scanned on PHASE_GRID points over [0, 2 pi) together with
    the trace phase phi* = -arg Tr(V^dagger U). Each entry has slope at most
    |u_ij| <= 1 in phi, so the global minimiser lies within one grid step of a
    point whose value is within half a step of the best scanned value. Every
    such point is refined with a bounded 1-D search over its neighbouring steps.
    """
    u, v = _check_pair(U, V)
    if not phase_invariant:
        return _max_entry(u - v)

    overlap = np.trace(v.conj().T @ u)
    phi_star = -float(np.angle(overlap)) if abs(overlap) > 0 else 0.0
    step = 2.0 * np.pi / PHASE_GRID
    grid = np.append(np.arange(PHASE_GRID) * step, phi_star)
    scan = np.max(np.abs(np.exp(1j * grid)[:, None, None] * u - v), axis=(1, 2))

    def _distance(phi: float) -> float:
        return _max_entry(np.exp(1j * phi) * u - v)

    best = float(scan.min())
    candidates = np.flatnonzero(scan <= best + step / 2.0)
    for phi in grid[candidates[np.argsort(scan[candidates])][:PHASE_REFINEMENTS]]:
        result = minimize_scalar(
            _distance,
            bounds=(phi - step, phi + step),
            method="bounded",
            options={"xatol": PHASE_XATOL},
        )
        best = min(best, float(result.fun))
    return best


def trace_phase_distances(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Cheap phase-invariant distance brackets for a stack of unitaries U[k].

    Returns:
        upper: max-entry distance at the trace phase phi* (an upper bound on the
               phase-minimised distance).
        lower: min over phi of the unnormalised Frobenius distance divided by d
               (a lower bound, since the max entry dominates ||.||_F / d).
    """
    dim = V.shape[0]
    overlaps = np.einsum("ji,kji->k", V.conj(), U)
    phases = np.exp(-1j * np.angle(overlaps))
    upper = np.max(np.abs(phases[:, None, None] * U - V), axis=(1, 2))
    frob = np.sqrt(np.maximum(2.0 * dim - 2.0 * np.abs(overlaps), 0.0))
    return upper, frob / dim


def _eigenphases(W: np.ndarray) -> tuple[np.ndarray, bool]:
    phases = np.angle(np.linalg.eigvals(W))
    on_cut = np.isclose(np.abs(phases), np.pi, rtol=0.0, atol=1e-12)
    # Fold -pi onto pi so the branch is (-pi, pi].
    phases = np.where(on_cut, np.pi, phases)
    return phases, bool(np.any(on_cut))


def geodesic_log_distance(U: npt.ArrayLike, V: npt.ArrayLike) -> GeodesicDistance:
    """Killing distance ||log(U^dagger V)||_F with the branch-ambiguity flag."""
    u, v = _check_pair(U, V)
    phases, ambiguous = _eigenphases(u.conj().T @ v)
    return GeodesicDistance(float(np.sqrt(np.mean(phases**2))), ambiguous)


def killing_geodesic_distance(U: npt.ArrayLike, V: npt.ArrayLike) -> float:
    """
    Bi-invariant geodesic distance between U and V.

    Eigenphases of U^dagger V are folded to (-pi, pi]; an eigenphase exactly on
    pi is logged as branch-ambiguous and the distance is still returned. Use
    `geodesic_log_distance` to get the flag programmatically.
    """
    distance = geodesic_log_distance(U, V)
    if distance.branch_ambiguous:
        logger.warning(
            "principal logarithm is branch-ambiguous (eigenphase on pi); "
            "returning distance %.6g",
            distance.value,
        )
    return distance.value


def phase_aligned_generator(
    W: npt.ArrayLike, phase_invariant: bool = True
) -> tuple[HermitianMatrix, float]:
    """
    Hermitian G with exp(-iG) = e^{i phi} W and the phase phi used.

    Without `phase_invariant`, phi = 0 and G is the principal generator. With
    it, phi minimises ||G||_F: the eigenphases are unwrapped at each of the d
    cyclic cut points, centred, and the cut with the smallest spread is kept.
    The resulting G is traceless.
    """
    matrix = as_square(W)
    triangular, vectors = schur(matrix, output="complex")
    theta = np.angle(np.diag(triangular))
    theta = np.where(np.isclose(theta, -np.pi, rtol=0.0, atol=1e-12), np.pi, theta)

    if phase_invariant:
        order = np.argsort(theta)
        ordered = theta[order]
        best: tuple[float, np.ndarray, float] | None = None
        for cut in range(ordered.size):
            shifted = ordered.copy()
            shifted[:cut] += 2.0 * np.pi
            phi = -float(np.mean(shifted))
            spread = float(np.mean((shifted + phi) ** 2))
            if best is None or spread < best[0] - 1e-15:
                best = (spread, shifted + phi, phi)
        assert best is not None
        psi = np.empty_like(theta)
        psi[order] = best[1]
        phi = best[2]
    else:
        psi = theta
        phi = 0.0

    generator = -(vectors * psi) @ vectors.conj().T
    generator = 0.5 * (generator + generator.conj().T)
    return generator, phi


def min_phase_geodesic_distance(U: npt.ArrayLike, V: npt.ArrayLike) -> float:
    """Killing distance from U to the closest global-phase copy of V."""
    u, v = _check_pair(U, V)
    generator, _ = phase_aligned_generator(u.conj().T @ v, phase_invariant=True)
    return frobenius_norm(generator)


def random_hermitian(
    rng: np.random.Generator, dim: int, traceless: bool = True
) -> HermitianMatrix:
    """Gaussian Hermitian matrix, optionally with its trace removed."""
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    matrix = 0.5 * (raw + raw.conj().T)
    if traceless:
        matrix = matrix - np.trace(matrix) / dim * np.eye(dim)
    return matrix


def random_unitary(rng: np.random.Generator, dim: int) -> UnitaryMatrix:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(raw)
    diagonal = r.diagonal()
    return q * (diagonal / np.abs(diagonal))
