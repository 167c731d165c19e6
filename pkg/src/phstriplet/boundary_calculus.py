"""
Extension calculus on boundary data.

Extensions of a skew-symmetric operator with a boundary triplet
``(C^d, G1, G2)`` are encoded by subspaces ``V`` of boundary pairs
``(g1, g2) in C^d x C^d``. This module implements the correspondences

    dissipative V  <->  contractive K on a subspace of C^d      (phi / psi)
    admissible W   <->  contraction K on C^d                    (theta / theta_section)

where ``V = {(g1, g2) : K(g1 + g2) = g1 - g2}`` and
``K = -(W1 + W2)^{-1}(W1 - W2)``.

Coordinates
-----------
Boundary matrices ``W`` act on flow/effort pairs ``(f, e)`` of the
port-Hamiltonian system. Subspaces live in triplet coordinates, related by
``(g1, g2) = (-f, e)``. With that bridge the kernel of ``W`` is exactly
``psi(theta(W))``, and the flow/effort pairs in ``ker W`` satisfy
``(K - 1) f - (K + 1) e = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NotDissipativeError, RankError, SingularMatrixError
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    as_matrix,
    is_invertible,
    is_psd_hermitian,
    nullspace_basis,
    numerical_rank,
    operator_norm,
    orthonormalize,
    subspace_residual,
)


def sigma(d: int) -> np.ndarray:
    """The ``2d x 2d`` matrix ``[[0, I], [I, 0]]``."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [eye, zero]]).astype(np.complex128)


@dataclass(frozen=True)
class BoundaryPair:
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        g1 = np.atleast_1d(np.asarray(self.g1, dtype=np.complex128))
        g2 = np.atleast_1d(np.asarray(self.g2, dtype=np.complex128))
        if g1.shape != g2.shape or g1.ndim != 1:
            raise ValueError(f"boundary values must be vectors of equal length, got {g1.shape} and {g2.shape}")
        object.__setattr__(self, "g1", g1)
        object.__setattr__(self, "g2", g2)

    @property
    def d(self) -> int:
        return self.g1.shape[0]


@dataclass(frozen=True)
class BoundarySubspace:
    """A subspace of ``C^d x C^d`` given by an orthonormal basis.

    ``basis`` has shape ``(2d, k)``; its upper ``d`` rows hold the ``g1``
    components and the lower ``d`` rows the ``g2`` components.
    """

    dim_d: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=np.complex128)
        if B.ndim != 2 or B.shape[0] != 2 * self.dim_d:
            raise ValueError(f"basis must have 2d = {2 * self.dim_d} rows, got shape {B.shape}")
        if B.shape[1] > 2 * self.dim_d:
            raise ValueError("subspace dimension exceeds 2d")
        object.__setattr__(self, "basis", B)

    @classmethod
    def from_spanning(cls, d: int, vectors, tol: Tolerances = DEFAULT_TOL) -> "BoundarySubspace":
        """Build from arbitrary spanning columns, orthonormalizing them."""
        V = np.asarray(vectors, dtype=np.complex128).reshape(2 * d, -1)
        return cls(d, orthonormalize(V, tol))

    @classmethod
    def zero(cls, d: int) -> "BoundarySubspace":
        return cls(d, np.zeros((2 * d, 0), dtype=np.complex128))

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @property
    def G1(self) -> np.ndarray:
        return self.basis[: self.dim_d]

    @property
    def G2(self) -> np.ndarray:
        return self.basis[self.dim_d :]

    def orthonormality_defect(self) -> float:
        if self.k == 0:
            return 0.0
        return float(np.linalg.norm(self.basis.conj().T @ self.basis - np.eye(self.k), 2))

    def distance(self, other: "BoundarySubspace") -> float:
        """Sine of the largest principal angle to ``other``."""
        if other.dim_d != self.dim_d:
            raise ValueError("subspaces live in different spaces")
        return subspace_residual(self.basis, other.basis)

    def contains(self, g1, g2, tol: Tolerances = DEFAULT_TOL) -> bool:
        v = np.concatenate([np.atleast_1d(g1), np.atleast_1d(g2)]).astype(np.complex128)
        r = v - self.basis @ (self.basis.conj().T @ v)
        return bool(np.linalg.norm(r) <= tol.eq_abs * (1.0 + np.linalg.norm(v)))


@dataclass(frozen=True)
class PartialContraction:
    """A contractive map defined on a subspace of ``C^d``.

    ``domain_basis`` (``d x m``) has orthonormal columns and ``action``
    (``d x m``) holds their images.
    """

    domain_basis: np.ndarray
    action: np.ndarray

    @property
    def d(self) -> int:
        return self.domain_basis.shape[0]

    @property
    def is_total(self) -> bool:
        return self.domain_basis.shape[1] == self.d

    def apply(self, y) -> np.ndarray:
        """Apply to ``y``, which must lie in the domain."""
        y = np.asarray(y, dtype=np.complex128)
        return self.action @ (self.domain_basis.conj().T @ y)

    def extend(self) -> np.ndarray:
        """Contraction on all of ``C^d`` that is zero on the domain's complement."""
        return self.action @ self.domain_basis.conj().T

    def contractivity_excess(self) -> float:
        """``||action|| - 1`` on the domain (``<= 0`` for a contraction)."""
        if self.domain_basis.shape[1] == 0:
            return -1.0
        return operator_norm(self.action) - 1.0


@dataclass(frozen=True)
class WVerdict:
    rank_ok: bool
    psd_ok: bool

    @property
    def admissible(self) -> bool:
        return self.rank_ok and self.psd_ok


def _split_w(W) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    W = as_matrix(W, name="W")
    d, cols = W.shape
    if cols != 2 * d:
        raise ValueError(f"W must have shape (d, 2d), got {W.shape}")
    return W, W[:, :d], W[:, d:]


def _dissipativity_form(V: BoundarySubspace) -> np.ndarray:
    # Gram form of 2 Re<g1, g2> on the basis coordinates
    return V.G1.conj().T @ V.G2 + V.G2.conj().T @ V.G1


def is_dissipative_subspace(V: BoundarySubspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``Re <g1, g2> >= 0`` on all of ``V``."""
    if V.k == 0:
        return True
    return is_psd_hermitian(_dissipativity_form(V), tol)


def is_maximal_dissipative_subspace(V: BoundarySubspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    return V.k == V.dim_d and is_dissipative_subspace(V, tol)


def phi(V: BoundarySubspace, tol: Tolerances = DEFAULT_TOL) -> PartialContraction:
    """The contractive map ``g1 + g2 -> g1 - g2`` on ``{g1 + g2 : (g1, g2) in V}``.

    Raises
    ------
    NotDissipativeError
        If ``V`` is not dissipative, or the sum map is not injective on it.
    """
    d = V.dim_d
    if V.k == 0:
        empty = np.zeros((d, 0), dtype=np.complex128)
        return PartialContraction(empty, empty.copy())
    if not is_dissipative_subspace(V, tol):
        raise NotDissipativeError("boundary subspace is not dissipative; phi would be multi-valued")
    S = V.G1 + V.G2
    T = V.G1 - V.G2
    u, s, vh = sla.svd(S, full_matrices=False)
    if s[-1] <= tol.rank_rel * max(s[0], 1.0):
        raise NotDissipativeError("g1 + g2 is not injective on the subspace")
    # S = u diag(s) vh, so u = S vh* diag(1/s) and its image is T vh* diag(1/s)
    action = (T @ vh.conj().T) / s
    return PartialContraction(u, action)


def psi(K, tol: Tolerances = DEFAULT_TOL) -> BoundarySubspace:
    """``{(g1, g2) : K(g1 + g2) = g1 - g2}``, parametrized by ``s = g1 + g2``."""
    K = as_matrix(K, name="K")
    d = K.shape[0]
    if K.shape != (d, d):
        raise ValueError(f"K must be square, got shape {K.shape}")
    eye = np.eye(d)
    spanning = 0.5 * np.vstack([eye + K, eye - K])
    Q, _ = np.linalg.qr(spanning)
    return BoundarySubspace(d, Q)


def validate_w(W, tol: Tolerances = DEFAULT_TOL) -> WVerdict:
    """Rank and positivity test for a boundary matrix ``W = [W1 W2]``."""
    W, W1, W2 = _split_w(W)
    d = W.shape[0]
    rank_ok = numerical_rank(W, tol) == d
    gram = W1 @ W2.conj().T + W2 @ W1.conj().T
    return WVerdict(rank_ok=rank_ok, psd_ok=is_psd_hermitian(gram, tol))


def theta(W, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``K = -(W1 + W2)^{-1}(W1 - W2)``.

    Raises
    ------
    SingularMatrixError
        If ``W1 + W2`` is singular, which cannot happen for admissible ``W``.
    """
    _, W1, W2 = _split_w(W)
    if not is_invertible(W1 + W2, tol):
        raise SingularMatrixError("W1 + W2 is singular; W is not admissible")
    return -sla.solve(W1 + W2, W1 - W2)


def theta_section(K) -> np.ndarray:
    """The boundary matrix ``[K - I, -(K + I)]`` mapped to ``K`` by :func:`theta`."""
    K = as_matrix(K, name="K")
    eye = np.eye(K.shape[0])
    return np.hstack([K - eye, -(K + eye)])


def w_kernel_subspace(W, tol: Tolerances = DEFAULT_TOL) -> BoundarySubspace:
    """``ker W`` transported to triplet coordinates ``(g1, g2) = (-f, e)``.

    Raises
    ------
    RankError
        If ``rank W != d``.
    """
    W, _, _ = _split_w(W)
    d = W.shape[0]
    if numerical_rank(W, tol) != d:
        raise RankError(f"W must have rank {d}")
    N = nullspace_basis(W, tol)
    N[:d] *= -1.0
    return BoundarySubspace(d, N)


def flow_effort_to_triplet(f, e) -> BoundaryPair:
    return BoundaryPair(-np.asarray(f, dtype=np.complex128), np.asarray(e, dtype=np.complex128))


def domain_law_residual(W, K, tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest ``||(K - 1) f - (K + 1) e||`` over an orthonormal basis of ``ker W``."""
    W, _, _ = _split_w(W)
    d = W.shape[0]
    K = as_matrix(K, name="K")
    N = nullspace_basis(W, tol)
    eye = np.eye(d)
    R = (K - eye) @ N[:d] - (K + eye) @ N[d:]
    if R.shape[1] == 0:
        return 0.0
    return float(np.max(np.linalg.norm(R, axis=0)))


def random_contraction(rng: np.random.Generator, d: int, norm: float | None = None) -> np.ndarray:
    """Random ``d x d`` matrix with operator norm ``norm`` (uniform in ``[0, 1]`` if omitted)."""
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    target = rng.uniform(0.0, 1.0) if norm is None else norm
    s = np.linalg.norm(G, 2)
    return G * (target / s)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_admissible_w(rng: np.random.Generator, d: int, K=None) -> np.ndarray:
    """``S [K - I, -(K + I)]`` with a random contraction ``K`` and invertible ``S``."""
    if K is None:
        K = random_contraction(rng, d)
    S = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) + 2 * np.eye(d)
    while not is_invertible(S):
        S = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return S @ theta_section(K)
