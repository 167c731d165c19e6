"""
Dense complex linear algebra with a single tolerance policy.

Every rank, kernel, positivity and norm decision in the package goes through
the functions here, so that one :class:`Tolerances` value controls all of
them. Matrices are plain :class:`numpy.ndarray` objects of dtype
``complex128``; :func:`as_matrix` is the only gate that admits them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used for numerical decisions.

    Attributes
    ----------
    rank_rel
        Relative singular value cutoff: ``s_i > rank_rel * s_max`` counts
        towards the rank.
    psd_abs
        Allowed negative slack of the smallest eigenvalue, scaled by
        ``1 + ||M||``.
    eq_abs
        Residual bound for equality checks.
    """

    rank_rel: float = 1e-10
    psd_abs: float = 1e-9
    eq_abs: float = 1e-9

    def __post_init__(self):
        for name in ("rank_rel", "psd_abs", "eq_abs"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"tolerance {name} must be positive, got {value!r}")


DEFAULT_TOL = Tolerances()


def as_matrix(M, *, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D ``complex128`` array.

    Scalars and 1-D inputs are promoted to a single row. Empty dimensions
    are rejected.
    """
    A = np.array(M, dtype=np.complex128)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


def _singular_values(M: np.ndarray) -> np.ndarray:
    return sla.svdvals(M)


def numerical_rank(M, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of singular values above ``rank_rel * s_max``."""
    s = _singular_values(as_matrix(M))
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_rel * s[0]))


def nullspace_basis(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``M``.

    Returns an array of shape ``(cols, cols - rank)``; the columns are the
    right singular vectors belonging to the discarded singular values.
    """
    A = as_matrix(M)
    _, s, vh = sla.svd(A, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(s > tol.rank_rel * s[0]))
    return vh[rank:].conj().T.copy()


def operator_norm(M) -> float:
    """Largest singular value."""
    return float(_singular_values(as_matrix(M))[0])


def hermitian_part(M) -> np.ndarray:
    A = as_matrix(M)
    return 0.5 * (A + A.conj().T)


def is_psd_hermitian(M, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Decide whether ``M`` is Hermitian positive semidefinite.

    The Hermiticity residual is checked first; only a matrix that passes is
    symmetrized for the eigenvalue test.
    """
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = 1.0 + operator_norm(A)
    if operator_norm(A - A.conj().T) > tol.eq_abs * scale:
        return False
    lam_min = sla.eigvalsh(hermitian_part(A))[0]
    return bool(lam_min >= -tol.psd_abs * scale)


def is_invertible(M, tol: Tolerances = DEFAULT_TOL) -> bool:
    A = as_matrix(M)
    return A.shape[0] == A.shape[1] and numerical_rank(A, tol) == A.shape[0]


def subspace_residual(U, V) -> float:
    """Sine of the largest principal angle between ``range(U)`` and ``range(V)``.

    Both arguments must have orthonormal columns. Subspaces of different
    dimension are at distance 1. Two empty subspaces are at distance 0.
    """
    U = np.asarray(U, dtype=np.complex128)
    V = np.asarray(V, dtype=np.complex128)
    if U.shape[1] != V.shape[1]:
        return 1.0
    if U.shape[1] == 0:
        return 0.0
    r1 = V - U @ (U.conj().T @ V)
    r2 = U - V @ (V.conj().T @ U)
    return float(max(np.linalg.norm(r1, 2), np.linalg.norm(r2, 2)))


def orthonormalize(B, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``range(B)`` via a thin SVD.

    Zero-column input is returned as an empty basis with the same row count.
    """
    B = np.asarray(B, dtype=np.complex128)
    if B.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {B.shape}")
    if B.shape[1] == 0:
        return np.zeros((B.shape[0], 0), dtype=np.complex128)
    u, s, _ = sla.svd(B, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((B.shape[0], 0), dtype=np.complex128)
    rank = int(np.count_nonzero(s > tol.rank_rel * s[0]))
    return u[:, :rank].copy()
