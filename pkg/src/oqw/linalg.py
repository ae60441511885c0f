"""
Dense complex linear algebra for coin operators.

Coin operators are plain ``(d, d)`` complex128 NumPy arrays. The only
structured type here is :class:`SpectralDecomposition`, the shared
orthonormal eigenbasis of a commuting normal pair ``(B, C)`` together with
the paired eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike, NDArray

from .errors import (
    CommutationError,
    DecompositionError,
    DimensionError,
    NonNormalError,
    TransitionError,
)

__all__ = [
    "CLUSTER_TOL",
    "RECONSTRUCTION_TOL",
    "SpectralDecomposition",
    "as_matrix",
    "commutator_norm",
    "is_normal",
    "joint_eigendecomposition",
    "max_abs",
]

#: Eigenvalues of ``B`` closer than this are treated as one degenerate cluster.
CLUSTER_TOL = 1e-8
#: Maximum entrywise error allowed when reassembling ``B`` and ``C``.
RECONSTRUCTION_TOL = 1e-10

ComplexMatrix = NDArray[np.complex128]


def as_matrix(m: ArrayLike, name: str = "matrix") -> ComplexMatrix:
    """Return ``m`` as a square, finite complex128 array.

    Raises
    ------
    DimensionError
        If ``m`` is not a non-empty square 2-D array.
    ValueError
        If any entry is NaN or infinite.
    """
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def max_abs(m: NDArray) -> float:
    """Max-entry magnitude, the norm used for every tolerance check."""
    return float(np.max(np.abs(m))) if m.size else 0.0


def commutator_norm(B: ArrayLike, C: ArrayLike) -> float:
    """Max-entry magnitude of ``BC - CB``."""
    B = as_matrix(B, "B")
    C = as_matrix(C, "C")
    if B.shape != C.shape:
        raise DimensionError(f"shape mismatch: {B.shape} vs {C.shape}")
    return max_abs(B @ C - C @ B)


def is_normal(M: ArrayLike, tol: float = RECONSTRUCTION_TOL) -> bool:
    """True iff ``M M^† - M^† M`` is zero to within ``tol`` (max-entry norm)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M, "M")
    return _normality_residual(M) <= tol


def _normality_residual(M: ComplexMatrix) -> float:
    Mh = M.conj().T
    return max_abs(M @ Mh - Mh @ M)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Shared orthonormal eigenbasis of a commuting normal coin pair.

    Attributes
    ----------
    basis : ndarray, shape (d, d)
        Column ``i`` is the eigenvector ``|b_i>``.
    lam : ndarray, shape (d,)
        Eigenvalue of ``B`` (right-jump operator) on ``|b_i>``.
    phi : ndarray, shape (d,)
        Eigenvalue of ``C`` (left-jump operator) on ``|b_i>``.

    Construction checks orthonormality of the basis and the per-vector
    normalization ``|lam_i|^2 + |phi_i|^2 = 1``.
    """

    basis: ComplexMatrix
    lam: NDArray[np.complex128]
    phi: NDArray[np.complex128]
    tol: float = RECONSTRUCTION_TOL

    def __post_init__(self):
        basis = np.array(self.basis, dtype=np.complex128)
        lam = np.array(self.lam, dtype=np.complex128).reshape(-1)
        phi = np.array(self.phi, dtype=np.complex128).reshape(-1)
        d = basis.shape[0]
        if basis.shape != (d, d) or lam.shape != (d,) or phi.shape != (d,):
            raise DimensionError(
                f"inconsistent shapes: basis {basis.shape}, lam {lam.shape}, phi {phi.shape}"
            )
        gram = basis.conj().T @ basis
        err = max_abs(gram - np.eye(d))
        if err > self.tol:
            raise DecompositionError(f"basis is not orthonormal (residual {err:.3e})", err)
        norm_err = float(np.max(np.abs(np.abs(lam) ** 2 + np.abs(phi) ** 2 - 1.0)))
        if norm_err > self.tol:
            raise TransitionError(
                f"|lam|^2 + |phi|^2 != 1 on some eigenvector (residual {norm_err:.3e})"
            )
        for arr in (basis, lam, phi):
            arr.flags.writeable = False
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "phi", phi)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def reconstruct(self) -> tuple[ComplexMatrix, ComplexMatrix]:
        """Return ``(sum lam_i |b_i><b_i|, sum phi_i |b_i><b_i|)``."""
        V = self.basis
        Vh = V.conj().T
        return (V * self.lam) @ Vh, (V * self.phi) @ Vh

    @classmethod
    def from_diagonal(cls, lam: ArrayLike, phi: ArrayLike) -> "SpectralDecomposition":
        """Decomposition in the standard basis."""
        lam = np.asarray(lam, dtype=np.complex128)
        return cls(np.eye(lam.shape[0], dtype=np.complex128), lam, phi)


def _cluster(values: NDArray, tol: float) -> list[list[int]]:
    # Greedy single-linkage in order of first appearance.
    clusters: list[list[int]] = []
    for i, v in enumerate(values):
        for members in clusters:
            if np.min(np.abs(values[members] - v)) <= tol:
                members.append(i)
                break
        else:
            clusters.append([i])
    return clusters


def joint_eigendecomposition(
    B: ArrayLike,
    C: ArrayLike,
    tol: float = RECONSTRUCTION_TOL,
    cluster_tol: float = CLUSTER_TOL,
) -> SpectralDecomposition:
    """
    Find an orthonormal basis diagonalizing both ``B`` and ``C``.

    ``B`` is brought to diagonal form by a complex Schur factorization
    (for a normal matrix the Schur vectors are eigenvectors). Eigenvalues
    of ``B`` within ``cluster_tol`` of each other form a degenerate block,
    and ``C`` restricted to each block is diagonalized the same way. This
    resolves pairs where ``B`` is degenerate but ``C`` is not.

    Parameters
    ----------
    B, C : array_like, shape (d, d)
        Commuting normal matrices.
    tol : float
        Bound on the commutator norm, the normality residual, and the
        entrywise reconstruction error.
    cluster_tol : float
        Distance below which two eigenvalues of ``B`` are merged.

    Returns
    -------
    SpectralDecomposition

    Raises
    ------
    CommutationError
        If ``||[B, C]||_max > tol``.
    NonNormalError
        If ``B`` or ``C`` is not normal within ``tol``.
    DecompositionError
        If the recovered spectra do not reproduce ``B`` and ``C`` within ``tol``.
    """
    B = as_matrix(B, "B")
    C = as_matrix(C, "C")
    cnorm = commutator_norm(B, C)
    if cnorm > tol:
        raise CommutationError(f"B and C do not commute: ||[B,C]||_max = {cnorm:.3e}", cnorm)
    for name, M in (("B", B), ("C", C)):
        res = _normality_residual(M)
        if res > tol:
            raise NonNormalError(f"{name} is not normal: ||MM^+ - M^+M||_max = {res:.3e}", res)

    T, Q = la.schur(B, output="complex")
    columns = []
    for members in _cluster(np.diag(T), cluster_tol):
        Qc = Q[:, members]
        if len(members) == 1:
            columns.append(Qc)
            continue
        _, W = la.schur(Qc.conj().T @ C @ Qc, output="complex")
        columns.append(Qc @ W)
    V = np.hstack(columns)
    # One Gram-Schmidt pass removes the O(eps) drift of the block products.
    V, R = np.linalg.qr(V)
    V = V * (np.diag(R) / np.abs(np.diag(R)))

    Vh = V.conj().T
    lam = np.einsum("ij,ji->i", Vh, B @ V)
    phi = np.einsum("ij,ji->i", Vh, C @ V)
    err = max(max_abs((V * lam) @ Vh - B), max_abs((V * phi) @ Vh - C))
    if err > tol:
        raise DecompositionError(f"reconstruction residual {err:.3e} exceeds {tol:.1e}", err)
    return SpectralDecomposition(V, lam, phi, tol=tol)
