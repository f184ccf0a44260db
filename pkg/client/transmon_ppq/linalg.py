"""Dense Hermitian linear algebra used by every other module.

Matrices are plain numpy arrays. Eigendecompositions follow one phase
convention (largest-magnitude entry of each eigenvector real and positive)
regardless of the backend, so labels and operator signs are reproducible.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Literal

import numpy as np
import numpy.typing as npt

from .errors import DimensionError, SymmetryError

log = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]

EigenMethod = Literal["lapack", "jacobi"]

HERMITIAN_RTOL = 1e-12
# Entries this close to the largest magnitude count as tied for the
# phase convention; the highest index wins.
PHASE_TIE_RTOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a Hermitian matrix.

    Attributes:
        eigenvalues: Real eigenvalues in ascending order.
        eigenvectors: Matrix whose columns are the orthonormal eigenvectors.
    """

    eigenvalues: RealVector
    eigenvectors: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        """Return V diag(lambda) V^dagger."""
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermiticity_deviation(a: npt.ArrayLike) -> float:
    """Return max |A_ij - conj(A_ji)|."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def unitarity_deviation(u: npt.ArrayLike) -> float:
    """Return max |U^dagger U - I|.

    For an n x m isometry (propagated subset of columns) the comparison is
    against the m x m identity.
    """
    u = np.asarray(u)
    gram = u.conj().T @ u
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def _check_hermitian(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    deviation = hermiticity_deviation(a)
    if deviation > HERMITIAN_RTOL * scale:
        raise SymmetryError(
            f"Matrix is not Hermitian: max deviation {deviation:.3e} "
            f"exceeds {HERMITIAN_RTOL:.0e} x {scale:.3e}"
        )


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    vectors = np.array(vectors, dtype=np.complex128, copy=True)
    magnitudes = np.abs(vectors)
    peaks = magnitudes.max(axis=0)
    for col in range(vectors.shape[1]):
        candidates = np.flatnonzero(
            magnitudes[:, col] >= peaks[col] * (1.0 - PHASE_TIE_RTOL)
        )
        pivot = vectors[candidates[-1], col]
        if pivot != 0:
            vectors[:, col] *= np.conj(pivot) / abs(pivot)
    return vectors


def _jacobi_eigh(
        a: np.ndarray,
        tol: float = 1e-14,
        max_sweeps: int = 60
) -> tuple[RealVector, ComplexMatrix]:
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Each rotation first removes the phase of A_pq and then applies the real
    symmetric Jacobi rotation that zeroes the pair.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return np.zeros(n), v

    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))
        if off <= tol * scale * n:
            log.debug(f"Jacobi converged after {sweep} sweeps (n={n})")
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= tol * scale * 1e-3:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q] * np.conj(phase)
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q

                row_p = a[p, :].copy()
                row_q = a[q, :] * phase
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q] * np.conj(phase)
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        log.warning(f"Jacobi did not converge in {max_sweeps} sweeps (n={n})")

    return np.real(np.diag(a)).copy(), v


def eig_hermitian(
        a: npt.ArrayLike,
        method: EigenMethod = "lapack"
) -> EigenDecomposition:
    """Diagonalize a Hermitian matrix.

    Args:
        a: Square Hermitian matrix (real symmetric is accepted).
        method: "lapack" uses numpy.linalg.eigh, "jacobi" the cyclic Jacobi
            solver of this module. Both produce the same ordering and phase
            convention.

    Returns:
        EigenDecomposition with ascending eigenvalues.

    Raises:
        DimensionError: Input is not square.
        SymmetryError: Input is not Hermitian within tolerance.
    """
    a = np.asarray(a)
    _check_hermitian(a)
    if method == "lapack":
        values, vectors = np.linalg.eigh(a)
    elif method == "jacobi":
        values, vectors = _jacobi_eigh(a)
    else:
        raise ValueError(f"Unknown eigensolver method '{method}'")

    order = np.argsort(values, kind="stable")
    values = np.asarray(values, dtype=np.float64)[order]
    vectors = _fix_phases(np.asarray(vectors)[:, order])
    return EigenDecomposition(eigenvalues=values, eigenvectors=vectors)


def expm_hermitian(
        a: npt.ArrayLike,
        scale: float,
        method: EigenMethod = "lapack"
) -> ComplexMatrix:
    """Return exp(i * scale * A) for Hermitian A via its eigendecomposition."""
    decomposition = eig_hermitian(a, method=method)
    v = decomposition.eigenvectors
    phases = np.exp(1j * scale * decomposition.eigenvalues)
    return (v * phases) @ v.conj().T


def kron(*matrices: npt.ArrayLike) -> ComplexMatrix:
    """Kronecker product of one or more matrices, left to right."""
    if not matrices:
        raise DimensionError("kron needs at least one matrix")
    return reduce(np.kron, (np.asarray(m) for m in matrices))
