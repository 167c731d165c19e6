"""
Energy-exact semi-discretization and Crank-Nicolson time stepping.

The state is the vector of nodal values ``X`` (``d (n+1)`` entries, node
major). The unconstrained operator is

    raw = (I (x) P0 + D (x) P1) Hh

with ``D`` the SBP 2-1 first-derivative matrix and ``Hh`` the block
diagonal of nodal Hamiltonian values. The energy is ``X* M X / 2`` with
``M = Mq (x) I . Hh`` (trapezoid weights times ``H``), and the SBP property
gives ``Re X* M raw X = Re <f, e>`` for every ``X``.

The boundary condition ``W (f; e) = 0`` involves only the two end nodes, so
its kernel has an orthonormal basis ``Q`` made of the interior unit vectors
plus a ``2d x d`` block at the ends. The generator is the Galerkin
restriction ``G = (Q* M Q)^{-1} Q* M raw Q`` in the energy inner product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .cayley import cayley_transform
from .errors import RankError, SingularMatrixError, ValidationError
from .grids import SpatialGrid, sbp_first_derivative, trapezoid_weights
from .numerics import DEFAULT_TOL, Tolerances, nullspace_basis, numerical_rank
from .phs_model import GridFunction, PHSystem, validate_system

MIN_CELLS = 8


@dataclass(frozen=True)
class DiscreteGenerator:
    sys: PHSystem
    grid: SpatialGrid
    raw: np.ndarray
    mass: np.ndarray
    constraint: np.ndarray
    Q: np.ndarray
    mass_reduced: np.ndarray
    reduced: np.ndarray
    hamiltonian_nodes: np.ndarray

    @property
    def r(self) -> int:
        return self.reduced.shape[0]

    @property
    def d(self) -> int:
        return self.sys.d

    @property
    def n(self) -> int:
        return self.grid.n

    def lift(self, z) -> GridFunction:
        """Reduced coordinates to a grid function."""
        X = self.Q @ np.asarray(z, dtype=np.complex128)
        return GridFunction(self.grid.nodes, X.reshape(self.n + 1, self.d))

    def restrict(self, x: GridFunction) -> tuple[np.ndarray, float]:
        """Energy-orthogonal projection onto the constrained space.

        Returns the reduced coordinates and the relative projection defect
        ``||X - Q z||_M / ||X||_M`` (0 when ``X`` already satisfies the
        boundary condition).
        """
        X = np.asarray(x.values, dtype=np.complex128).reshape(-1)
        MX = self.mass @ X
        z = sla.solve(self.mass_reduced, self.Q.conj().T @ MX, assume_a="her")
        diff = X - self.Q @ z
        norm = np.sqrt(max(np.vdot(X, MX).real, 0.0))
        defect = np.sqrt(max(np.vdot(diff, self.mass @ diff).real, 0.0))
        return z, (defect / norm if norm > 0 else 0.0)

    def energy(self, z) -> float:
        z = np.asarray(z, dtype=np.complex128)
        return 0.5 * float(np.vdot(z, self.mass_reduced @ z).real)

    def boundary_power(self, z) -> float:
        X = (self.Q @ np.asarray(z, dtype=np.complex128)).reshape(self.n + 1, self.d)
        ya = self.hamiltonian_nodes[0] @ X[0]
        yb = self.hamiltonian_nodes[-1] @ X[-1]
        f = self.sys.P1 @ (yb - ya) / np.sqrt(2.0)
        e = (yb + ya) / np.sqrt(2.0)
        return float(np.vdot(e, f).real)

    def weighted_norm(self, z) -> float:
        return np.sqrt(2.0 * self.energy(z))

    def symmetrized(self) -> np.ndarray:
        """``L* G L^{-*}`` where ``M_r = L L*``; dissipative in the Euclidean norm iff ``G`` is in ``M_r``."""
        L = np.linalg.cholesky(self.mass_reduced)
        MG = self.mass_reduced @ self.reduced
        T = sla.solve_triangular(L, MG, lower=True)
        return sla.solve_triangular(L, T.conj().T, lower=True).conj().T


def _constraint_matrix(sys: PHSystem, n: int, Hn: np.ndarray) -> np.ndarray:
    d = sys.d
    W1, W2 = sys.W[:, :d], sys.W[:, d:]
    s = 1.0 / np.sqrt(2.0)
    C = np.zeros((d, d * (n + 1)), dtype=np.complex128)
    # f = P1 (y_n - y_0)/sqrt2, e = (y_n + y_0)/sqrt2, y = H x
    C[:, :d] = s * (-W1 @ sys.P1 + W2) @ Hn[0]
    C[:, d * n :] = s * (W1 @ sys.P1 + W2) @ Hn[-1]
    return C


def _constraint_basis(C: np.ndarray, d: int, n: int, tol: Tolerances) -> np.ndarray:
    size = d * (n + 1)
    ends = np.r_[np.arange(d), np.arange(d * n, size)]
    K = nullspace_basis(C[:, ends], tol)
    if K.shape[1] != d:
        raise RankError(f"boundary constraint has rank {2 * d - K.shape[1]}, expected {d}")
    Q = np.zeros((size, d * (n - 1) + d), dtype=np.complex128)
    Q[ends, :d] = K
    interior = np.arange(d, d * n)
    Q[interior, d + np.arange(interior.size)] = 1.0
    return Q


def assemble(sys: PHSystem, n: int, tol: Tolerances = DEFAULT_TOL, *, check: bool = True) -> DiscreteGenerator:
    """Assemble the reduced generator on ``n`` cells.

    ``check=False`` skips the admissibility of ``W`` (used to study
    boundary conditions that violate it); the operator assumptions and the
    rank of the constraint are always enforced.

    Raises
    ------
    ValidationError
        If the system fails validation.
    RankError
        If the boundary constraint does not have rank ``d``.
    """
    if n < MIN_CELLS:
        raise ValueError(f"need at least {MIN_CELLS} cells, got {n}")
    verdict = validate_system(sys, tol)
    if not verdict.operator_ok or (check and not verdict.ok):
        raise ValidationError("; ".join(verdict.messages))
    if not verdict.w.rank_ok:
        raise RankError(f"W must have rank {sys.d}")

    d = sys.d
    grid = SpatialGrid(sys.a, sys.b, n)
    Hn = sys.hamiltonian_at(grid.nodes)
    Hh = sla.block_diag(*Hn).astype(np.complex128)
    D = sbp_first_derivative(n, grid.h)
    raw = (np.kron(np.eye(n + 1), sys.P0) + np.kron(D, sys.P1)) @ Hh
    w = trapezoid_weights(n, grid.h)
    mass = np.kron(np.diag(w), np.eye(d)) @ Hh
    mass = 0.5 * (mass + mass.conj().T)

    C = _constraint_matrix(sys, n, Hn)
    if numerical_rank(C, tol) != d:
        raise RankError(f"boundary constraint has rank != {d}")
    Q = _constraint_basis(C, d, n, tol)
    Mr = Q.conj().T @ mass @ Q
    Mr = 0.5 * (Mr + Mr.conj().T)
    reduced = sla.solve(Mr, Q.conj().T @ mass @ raw @ Q, assume_a="her")
    return DiscreteGenerator(sys, grid, raw, mass, C, Q, Mr, reduced, Hn)


def dissipativity_margin(G: DiscreteGenerator) -> float:
    """Largest eigenvalue of ``(M_r G + G* M_r)/2`` relative to ``M_r``."""
    A = G.mass_reduced @ G.reduced
    A = 0.5 * (A + A.conj().T)
    return float(sla.eigh(A, G.mass_reduced, eigvals_only=True)[-1])


def spectrum(G: DiscreteGenerator) -> np.ndarray:
    """Eigenvalues of the reduced generator, sorted by decreasing real part.

    They are computed from the energy-symmetrized similar matrix, whose
    numerical range bounds the real parts by the dissipativity margin.
    """
    ev = np.linalg.eigvals(G.symmetrized())
    return ev[np.lexsort((ev.imag, -ev.real))]


class Stepper:
    """Crank-Nicolson step for a fixed ``dt``, factorized once."""

    def __init__(self, G: DiscreteGenerator, dt: float):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = dt
        A = 0.5 * dt * G.reduced
        eye = np.eye(G.r)
        self._rhs = eye + A
        try:
            self._lu = sla.lu_factor(eye - A, check_finite=True)
        except (ValueError, sla.LinAlgError) as exc:
            raise SingularMatrixError("I - dt/2 G is singular") from exc
        if np.any(np.abs(np.diag(self._lu[0])) == 0.0):
            raise SingularMatrixError("I - dt/2 G is singular")

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self._lu, self._rhs @ z)


def step(G: DiscreteGenerator, x, dt: float) -> np.ndarray:
    """``x+ = (I - dt/2 G)^{-1} (I + dt/2 G) x``."""
    return Stepper(G, dt)(np.asarray(x, dtype=np.complex128))


def cayley_step_matrix(G: DiscreteGenerator, dt: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    return cayley_transform(0.5 * dt * G.reduced, tol)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    energies: np.ndarray
    boundary_powers: np.ndarray
    projection_defect: float = 0.0

    def __len__(self) -> int:
        return len(self.times)


def simulate(
    G: DiscreteGenerator,
    x0: GridFunction,
    T: float,
    dt: float,
    *,
    keep_states: bool = True,
) -> Trajectory:
    """Integrate from ``x0`` up to ``T`` with constant steps ``dt``.

    ``x0`` is projected onto the boundary condition in the energy norm; the
    relative defect of that projection is stored on the trajectory. The
    last step is shortened when ``T`` is not a multiple of ``dt``.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    z, defect = G.restrict(x0)
    nsteps = int(np.floor(T / dt + 1e-9))
    steps = [dt] * nsteps
    if T - nsteps * dt > 1e-12 * T:
        steps.append(T - nsteps * dt)
    stepper = Stepper(G, dt)
    tail = Stepper(G, steps[-1]) if steps and steps[-1] != dt else stepper

    times = [0.0]
    states = [G.lift(z)] if keep_states else []
    energies = [G.energy(z)]
    powers = [G.boundary_power(z)]
    t = 0.0
    for k, h in enumerate(steps):
        z = (stepper if h == dt else tail)(z)
        t = (k + 1) * dt if h == dt else T
        times.append(t)
        if keep_states:
            states.append(G.lift(z))
        energies.append(G.energy(z))
        powers.append(G.boundary_power(z))
    return Trajectory(np.array(times), states, np.array(energies), np.array(powers), defect)


def power_balance_residual(traj: Trajectory) -> float:
    """Max over interior times of ``|dE/dt - boundary power|`` (centered differences)."""
    t, E, P = traj.times, traj.energies, traj.boundary_powers
    if len(t) < 3:
        raise ValueError("need at least three states")
    dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    return float(np.max(np.abs(dEdt - P[1:-1])))


def max_energy_increase(traj: Trajectory) -> float:
    """Largest single-step energy increase (negative when strictly decreasing)."""
    return float(np.max(np.diff(traj.energies)))


# {{{ initial states


def bump(center: float = 0.5, halfwidth: float = 0.3, amplitude=1.0) -> Callable:
    """``cos^2`` bump supported in ``[center - halfwidth, center + halfwidth]``."""

    def fn(xi):
        s = (np.asarray(xi) - center) / halfwidth
        out = np.where(np.abs(s) < 1, np.cos(0.5 * np.pi * s) ** 2, 0.0)
        return np.multiply.outer(out, np.atleast_1d(amplitude))

    return fn


def gaussian(center: float = 0.5, width: float = 0.1, amplitude=1.0) -> Callable:
    def fn(xi):
        out = np.exp(-0.5 * ((np.asarray(xi) - center) / width) ** 2)
        return np.multiply.outer(out, np.atleast_1d(amplitude))

    return fn


def sine(a: float, b: float, mode: float = 1.0, amplitude=1.0) -> Callable:
    def fn(xi):
        out = np.sin(mode * np.pi * (np.asarray(xi) - a) / (b - a))
        return np.multiply.outer(out, np.atleast_1d(amplitude))

    return fn


def constant(value=1.0) -> Callable:
    def fn(xi):
        return np.multiply.outer(np.ones_like(np.asarray(xi, dtype=float)), np.atleast_1d(value))

    return fn


# }}}
