"""
Dissipative matrices and the Cayley transform.

A square matrix ``A`` is dissipative when ``Re <Ax, x> <= 0`` for every
``x``. Its Cayley transform ``C = (1 + A)(1 - A)^{-1}`` is a contraction,
and an isometry when ``A`` is skew-Hermitian. The inverse map is
``A = -(1 - C)(1 + C)^{-1}``.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
import scipy.linalg as sla

from .errors import SingularMatrixError
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    as_matrix,
    hermitian_part,
    is_invertible,
    operator_norm,
)


def _square(A, name="A") -> np.ndarray:
    A = as_matrix(A, name=name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def dissipativity_excess(A) -> float:
    """Largest eigenvalue of the Hermitian part ``(A + A*)/2``."""
    return float(sla.eigvalsh(hermitian_part(_square(A)))[-1])


def is_dissipative(A, tol: Tolerances = DEFAULT_TOL) -> bool:
    A = _square(A)
    return dissipativity_excess(A) <= tol.psd_abs * (1.0 + operator_norm(A))


def resolvent_bound_check(
    A,
    lambdas: Iterable[float],
    samples: int = 64,
    tol: Tolerances = DEFAULT_TOL,
    rng: np.random.Generator | int | None = 0,
) -> bool:
    """Check ``lam * ||x|| <= ||(lam - A) x||`` on sampled unit vectors.

    For each ``lam`` the probe set is ``samples`` random complex unit
    vectors plus the right singular vector of ``lam - A`` belonging to its
    smallest singular value, which is where the inequality is tightest.

    Raises
    ------
    ValueError
        If some ``lam <= 0``.
    """
    A = _square(A)
    lambdas = [float(lam) for lam in lambdas]
    if any(not lam > 0 for lam in lambdas):
        raise ValueError(f"all lambdas must be positive, got {lambdas}")
    rng = np.random.default_rng(rng)
    n = A.shape[0]
    X = rng.standard_normal((n, samples)) + 1j * rng.standard_normal((n, samples))
    X /= np.linalg.norm(X, axis=0)
    eye = np.eye(n)
    for lam in lambdas:
        R = lam * eye - A
        _, _, vh = sla.svd(R)
        probes = np.column_stack([X, vh[-1].conj()])
        lhs = lam * np.linalg.norm(probes, axis=0)
        rhs = np.linalg.norm(R @ probes, axis=0)
        if np.any(lhs > rhs + tol.eq_abs):
            return False
    return True


def cayley_transform(A, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``C = (1 + A)(1 - A)^{-1}``.

    The two factors commute, so ``C`` is computed as a single solve with
    ``1 - A``.
    """
    A = _square(A)
    eye = np.eye(A.shape[0])
    if not is_invertible(eye - A, tol):
        raise SingularMatrixError("1 - A is singular; the Cayley transform is undefined")
    return sla.solve(eye - A, eye + A)


def inverse_cayley(C, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``A = -(1 - C)(1 + C)^{-1}``."""
    C = _square(C, name="C")
    eye = np.eye(C.shape[0])
    if not is_invertible(eye + C, tol):
        raise SingularMatrixError("1 + C is singular; C is not a Cayley transform")
    return -sla.solve(eye + C, eye - C)


def random_dissipative(
    rng: np.random.Generator,
    d: int,
    *,
    skew_scale: float = 1.0,
    damping_scale: float = 1.0,
    rank: int | None = None,
) -> np.ndarray:
    """Random dissipative matrix ``S - P`` with ``S`` skew-Hermitian, ``P`` PSD.

    ``rank`` limits the rank of ``P``; ``rank=0`` gives a skew-Hermitian
    matrix.
    """
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    S = skew_scale * 0.5 * (G - G.conj().T) / np.sqrt(2 * d)
    k = d if rank is None else rank
    F = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    P = damping_scale * (F @ F.conj().T) / (2 * d)
    return S - P
