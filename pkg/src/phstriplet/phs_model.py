"""
Linear port-Hamiltonian systems on an interval.

The state ``x(t, xi) in C^d`` on ``[a, b]`` evolves by

    dx/dt = P0 (H x) + P1 d(H x)/dxi,      W (f; e) = 0,

with ``P0`` skew-Hermitian, ``P1`` Hermitian invertible, ``H(xi)`` Hermitian
with spectrum in ``[m, M]`` and boundary flow/effort of ``y = H x``

    f = P1 (y(b) - y(a)) / sqrt(2),     e = (y(b) + y(a)) / sqrt(2).

Functions are represented by their samples on an equispaced grid
(:class:`GridFunction`); integrals use the trapezoid rule. The adjoint of
the minimal operator is ``A* y = -P0 y - P1 y'``, and its deficiency spaces
``ker(1 -+ A*)`` are computed exactly from matrix exponentials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .boundary_calculus import BoundaryPair, WVerdict, validate_w
from .errors import SingularMatrixError, ValidationError
from .grids import SpatialGrid, second_order_derivative, trapezoid_weights
from .numerics import DEFAULT_TOL, Tolerances, as_matrix, is_invertible, operator_norm

SQRT2 = np.sqrt(2.0)

HAMILTONIAN_KINDS = ("constant", "cells", "nodes")


# {{{ domain types


@dataclass(frozen=True)
class HamiltonianField:
    """Energy density matrix ``H(xi)``.

    ``kind`` is ``"constant"`` (one value), ``"cells"`` (one value per cell of
    a uniform partition of ``[a, b]``; interface nodes take the average of
    the neighbouring cells) or ``"nodes"`` (one value per grid node).
    """

    kind: str
    values: tuple
    m: float
    M: float

    def __post_init__(self):
        if self.kind not in HAMILTONIAN_KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        values = tuple(as_matrix(v, name="H value") for v in self.values)
        if not values:
            raise ValueError("Hamiltonian needs at least one value")
        if self.kind == "constant" and len(values) != 1:
            raise ValueError("a constant Hamiltonian has exactly one value")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, H, m: float | None = None, M: float | None = None) -> "HamiltonianField":
        H = as_matrix(H)
        ev = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
        return cls("constant", (H,), float(ev[0]) if m is None else m, float(ev[-1]) if M is None else M)

    @property
    def d(self) -> int:
        return self.values[0].shape[0]

    @property
    def is_identity(self) -> bool:
        eye = np.eye(self.d)
        return all(np.array_equal(v, eye) for v in self.values)

    def at_nodes(self, nodes: np.ndarray, a: float, b: float) -> np.ndarray:
        """Values at ``nodes`` as an array of shape ``(len(nodes), d, d)``."""
        nodes = np.asarray(nodes, dtype=float)
        V = np.stack(self.values)
        if self.kind == "constant":
            return np.broadcast_to(V[0], (nodes.size, self.d, self.d)).copy()
        if self.kind == "nodes":
            if len(self.values) != nodes.size:
                raise ValueError(f"node-sampled Hamiltonian has {len(self.values)} values for {nodes.size} nodes")
            return V.copy()
        ncells = len(self.values)
        s = (nodes - a) / (b - a) * ncells
        lo = np.clip(np.floor(s).astype(int), 0, ncells - 1)
        out = V[lo].copy()
        on_interface = (np.abs(s - np.round(s)) < 1e-12) & (np.round(s) > 0) & (np.round(s) < ncells)
        for i in np.flatnonzero(on_interface):
            j = int(np.round(s[i]))
            out[i] = 0.5 * (V[j - 1] + V[j])
        return out


@dataclass(frozen=True)
class PHSystem:
    d: int
    a: float
    b: float
    P0: np.ndarray
    P1: np.ndarray
    H: HamiltonianField
    W: np.ndarray

    def __post_init__(self):
        d = self.d
        P0 = as_matrix(self.P0, name="P0")
        P1 = as_matrix(self.P1, name="P1")
        W = as_matrix(self.W, name="W")
        if P0.shape != (d, d) or P1.shape != (d, d):
            raise ValueError(f"P0 and P1 must be {d}x{d}")
        if W.shape != (d, 2 * d):
            raise ValueError(f"W must be {d}x{2 * d}, got {W.shape}")
        if self.H.d != d:
            raise ValueError(f"Hamiltonian is {self.H.d}x{self.H.d}, expected {d}x{d}")
        if not self.b > self.a:
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")
        object.__setattr__(self, "P0", P0)
        object.__setattr__(self, "P1", P1)
        object.__setattr__(self, "W", W)

    def with_w(self, W) -> "PHSystem":
        return PHSystem(self.d, self.a, self.b, self.P0, self.P1, self.H, W)

    def grid(self, n: int) -> SpatialGrid:
        return SpatialGrid(self.a, self.b, n)

    def hamiltonian_at(self, nodes) -> np.ndarray:
        return self.H.at_nodes(nodes, self.a, self.b)


@dataclass(frozen=True)
class GridFunction:
    """Samples ``values[i] = x(grid[i])`` of a ``C^d``-valued function."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim == 1:
            values = values[:, None]
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("a grid function needs at least two nodes")
        if values.shape[0] != grid.size:
            raise ValueError(f"{values.shape[0]} values for {grid.size} nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, fn: Callable[[np.ndarray], np.ndarray], sys: PHSystem, n: int) -> "GridFunction":
        """Sample ``fn`` on ``n`` cells of ``sys``'s interval.

        ``fn`` maps the node array to an array of shape ``(n+1,)`` (for
        ``d = 1``) or ``(n+1, d)``.
        """
        nodes = sys.grid(n).nodes
        vals = np.asarray(fn(nodes), dtype=np.complex128)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape != (n + 1, sys.d):
            raise ValueError(f"sampled values have shape {vals.shape}, expected {(n + 1, sys.d)}")
        return cls(nodes, vals)

    @classmethod
    def zeros(cls, sys: PHSystem, n: int) -> "GridFunction":
        return cls(sys.grid(n).nodes, np.zeros((n + 1, sys.d), dtype=np.complex128))

    @property
    def n(self) -> int:
        return self.grid.size - 1

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.n, self.h)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self.with_values(self.values - other.values)

    def scale(self, c) -> "GridFunction":
        return self.with_values(c * self.values)


# }}}


# {{{ validation


@dataclass(frozen=True)
class SystemVerdict:
    p0_skew: bool
    p1_hermitian: bool
    p1_invertible: bool
    hamiltonian_ok: bool
    w: WVerdict
    messages: tuple = field(default=())

    @property
    def operator_ok(self) -> bool:
        """The assumptions on ``P0``, ``P1`` and ``H`` (not on ``W``)."""
        return self.p0_skew and self.p1_hermitian and self.p1_invertible and self.hamiltonian_ok

    @property
    def ok(self) -> bool:
        return self.operator_ok and self.w.admissible

    def as_dict(self) -> dict:
        return {
            "p0_skew": self.p0_skew,
            "p1_hermitian": self.p1_hermitian,
            "p1_invertible": self.p1_invertible,
            "hamiltonian_ok": self.hamiltonian_ok,
            "rank_ok": self.w.rank_ok,
            "psd_ok": self.w.psd_ok,
        }


def _hamiltonian_ok(H: HamiltonianField, tol: Tolerances) -> tuple[bool, list[str]]:
    msgs = []
    if not (0 < H.m <= H.M):
        msgs.append(f"Hamiltonian bounds must satisfy 0 < m <= M, got m={H.m}, M={H.M}")
    for i, V in enumerate(H.values):
        scale = 1.0 + operator_norm(V)
        if operator_norm(V - V.conj().T) > tol.eq_abs * scale:
            msgs.append(f"Hamiltonian value {i} is not Hermitian")
            continue
        ev = np.linalg.eigvalsh(0.5 * (V + V.conj().T))
        slack = tol.psd_abs * scale
        if ev[0] < H.m - slack or ev[-1] > H.M + slack:
            msgs.append(f"Hamiltonian value {i} has eigenvalues outside [{H.m}, {H.M}]")
    return not msgs, msgs


def validate_system(sys: PHSystem, tol: Tolerances = DEFAULT_TOL) -> SystemVerdict:
    P0, P1 = sys.P0, sys.P1
    msgs = []
    p0_skew = operator_norm(P0 + P0.conj().T) <= tol.eq_abs * (1.0 + operator_norm(P0))
    if not p0_skew:
        msgs.append("P0 is not skew-Hermitian")
    p1_herm = operator_norm(P1 - P1.conj().T) <= tol.eq_abs * (1.0 + operator_norm(P1))
    if not p1_herm:
        msgs.append("P1 is not Hermitian")
    p1_inv = is_invertible(P1, tol)
    if not p1_inv:
        msgs.append("P1 is singular")
    h_ok, h_msgs = _hamiltonian_ok(sys.H, tol)
    msgs.extend(h_msgs)
    wv = validate_w(sys.W, tol)
    if not wv.rank_ok:
        msgs.append(f"W does not have rank {sys.d}")
    if not wv.psd_ok:
        msgs.append("W Sigma W* is not positive semidefinite")
    return SystemVerdict(p0_skew, p1_herm, p1_inv, h_ok, wv, tuple(msgs))


# }}}


# {{{ boundary maps, operator, energy


def flow_effort(y: GridFunction, sys: PHSystem) -> tuple[np.ndarray, np.ndarray]:
    """Boundary flow and effort ``(f, e)`` of ``y`` read from the end nodes."""
    ya, yb = y.values[0], y.values[-1]
    return sys.P1 @ (yb - ya) / SQRT2, (yb + ya) / SQRT2


def triplet_boundary(y: GridFunction, sys: PHSystem) -> BoundaryPair:
    """Boundary values in triplet coordinates ``(g1, g2) = (-f, e)``."""
    f, e = flow_effort(y, sys)
    return BoundaryPair(-f, e)


def apply_hamiltonian(x: GridFunction, sys: PHSystem) -> GridFunction:
    if sys.H.is_identity:
        return x
    Hn = sys.hamiltonian_at(x.grid)
    return x.with_values(np.einsum("nij,nj->ni", Hn, x.values))


def apply_operator(y: GridFunction, sys: PHSystem) -> GridFunction:
    """``P0 (H y) + P1 (H y)'`` with second-order differences at every node."""
    hy = apply_hamiltonian(y, sys).values
    dhy = second_order_derivative(hy, y.h)
    return y.with_values(hy @ sys.P0.T + dhy @ sys.P1.T)


def inner_l2(u: GridFunction, v: GridFunction) -> complex:
    """Trapezoid ``<u, v>``, linear in ``u``."""
    w = u.weights()
    return complex(np.sum(w * np.sum(u.values * v.values.conj(), axis=1)))


def inner_x(u: GridFunction, v: GridFunction, sys: PHSystem) -> complex:
    """Energy inner product ``<H u, v>``."""
    return inner_l2(apply_hamiltonian(u, sys), v)


def energy(x: GridFunction, sys: PHSystem) -> float:
    """``E = <H x, x> / 2`` by the trapezoid rule."""
    return 0.5 * inner_x(x, x, sys).real


def boundary_power(x: GridFunction, sys: PHSystem) -> float:
    """``Re <f, e>`` of ``H x``; equals ``dE/dt`` along solutions."""
    f, e = flow_effort(apply_hamiltonian(x, sys), sys)
    return float(np.vdot(e, f).real)


def green_identity_terms(x: GridFunction, y: GridFunction, sys: PHSystem) -> tuple[complex, complex]:
    """Both sides of the abstract Green identity for the nodal triplet.

    Returns ``(<A* x, y>_X + <x, A* y>_X, <g1(x), g2(y)> + <g2(x), g1(y)>)``
    with ``A* = -apply_operator`` and ``g`` taken of ``H x``, ``H y``.
    """
    ax = apply_operator(x, sys).scale(-1.0)
    ay = apply_operator(y, sys).scale(-1.0)
    # <B x, y>_X = <B x, H y>_L2 since H is Hermitian
    hx, hy = apply_hamiltonian(x, sys), apply_hamiltonian(y, sys)
    lhs = inner_l2(ax, hy) + inner_l2(hx, ay)
    gx, gy = triplet_boundary(hx, sys), triplet_boundary(hy, sys)
    rhs = np.vdot(gy.g2, gx.g1) + np.vdot(gy.g1, gx.g2)
    return complex(lhs), complex(rhs)


def green_identity_residual(x: GridFunction, y: GridFunction, sys: PHSystem) -> float:
    lhs, rhs = green_identity_terms(x, y, sys)
    return abs(lhs - rhs)


# }}}


# {{{ deficiency spaces and decomposition


@dataclass(frozen=True)
class DeficiencyBasis:
    """Fundamental solutions of ``A* x = epsilon x``.

    ``values[i, :, j]`` is the ``j``-th solution at node ``i``; the solutions
    start from the identity at ``xi = a``.
    """

    epsilon: int
    grid: np.ndarray
    values: np.ndarray
    residuals: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def endpoint_matrix(self) -> np.ndarray:
        """Values at ``a`` stacked over values at ``b`` (``2d x d``)."""
        return np.vstack([self.values[0], self.values[-1]])

    def column(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.values[:, :, j])

    @property
    def columns(self) -> list[GridFunction]:
        return [self.column(j) for j in range(self.dim)]

    def combine(self, coeffs) -> GridFunction:
        return GridFunction(self.grid, self.values @ np.asarray(coeffs, dtype=np.complex128))

    def gram(self) -> np.ndarray:
        """Trapezoid ``L^2`` Gram matrix of the columns."""
        w = trapezoid_weights(self.grid.size - 1, self.grid[1] - self.grid[0])
        return np.einsum("n,nia,nib->ab", w, self.values.conj(), self.values)


def _require_operator(sys: PHSystem, tol: Tolerances) -> None:
    v = validate_system(sys, tol)
    if not v.operator_ok:
        raise ValidationError("; ".join(m for m in v.messages if not m.startswith("W")))


def deficiency_generator(sys: PHSystem, epsilon: int) -> np.ndarray:
    """The constant matrix ``G`` with ``x' = G x`` for ``A* x = epsilon x``."""
    if epsilon not in (1, -1):
        raise ValueError(f"epsilon must be +1 or -1, got {epsilon}")
    d = sys.d
    return -sla.solve(sys.P1, epsilon * np.eye(d) + sys.P0)


def deficiency_basis(
    sys: PHSystem, epsilon: int, n: int, tol: Tolerances = DEFAULT_TOL
) -> DeficiencyBasis:
    """Basis of ``ker(1 - epsilon A*)`` for the reduced (``H = I``) operator.

    Each node value is an independent matrix exponential, so there is no
    accumulation error along the grid. The residual of column ``j`` is
    ``||A* x - epsilon x|| / ||x||`` in trapezoid ``L^2`` with ``x'`` taken
    from the ODE.

    Raises
    ------
    ValidationError
        If ``P0``, ``P1`` or ``H`` violate the standing assumptions.
    """
    _require_operator(sys, tol)
    G = deficiency_generator(sys, epsilon)
    nodes = sys.grid(n).nodes
    values = np.stack([sla.expm((xi - sys.a) * G) for xi in nodes])
    derivs = np.einsum("ij,njk->nik", G, values)
    adj = -np.einsum("ij,njk->nik", sys.P0, values) - np.einsum("ij,njk->nik", sys.P1, derivs)
    r = adj - epsilon * values
    w = trapezoid_weights(n, nodes[1] - nodes[0])
    num = np.sqrt(np.einsum("n,nij->j", w, np.abs(r) ** 2))
    den = np.sqrt(np.einsum("n,nij->j", w, np.abs(values) ** 2))
    return DeficiencyBasis(epsilon, nodes, values, num / den)


@dataclass(frozen=True)
class Decomposition:
    x1: GridFunction
    coeff_plus: np.ndarray
    coeff_minus: np.ndarray
    residual: float


def domain_decompose(
    x: GridFunction,
    sys: PHSystem,
    tol: Tolerances = DEFAULT_TOL,
    plus: DeficiencyBasis | None = None,
    minus: DeficiencyBasis | None = None,
) -> Decomposition:
    """Split ``x = x1 + N+ c+ + N- c-`` with ``x1`` vanishing at both ends.

    ``N+`` spans ``ker(1 - A*)`` and ``N-`` spans ``ker(1 + A*)``. The
    coefficients come from the ``2d x 2d`` system matching the end values.

    Raises
    ------
    SingularMatrixError
        If the endpoint system is singular.
    """
    plus = plus if plus is not None else deficiency_basis(sys, +1, x.n, tol)
    minus = minus if minus is not None else deficiency_basis(sys, -1, x.n, tol)
    if plus.grid.size != x.grid.size or minus.grid.size != x.grid.size:
        raise ValueError("deficiency bases live on a different grid")
    d = sys.d
    E = np.hstack([plus.endpoint_matrix, minus.endpoint_matrix])
    if not is_invertible(E, tol):
        raise SingularMatrixError("endpoint system of the deficiency bases is singular")
    rhs = np.concatenate([x.values[0], x.values[-1]])
    c = sla.solve(E, rhs)
    cp, cm = c[:d], c[d:]
    x1 = x - plus.combine(cp) - minus.combine(cm)
    residual = float(max(np.linalg.norm(x1.values[0]), np.linalg.norm(x1.values[-1])))
    return Decomposition(x1, cp, cm, residual)


class CanonicalTriplet:
    """Boundary maps built from the deficiency decomposition.

    With orthonormal (trapezoid ``L^2``) bases of ``ker(1 - A*)`` and
    ``ker(1 + A*)`` and the isometry ``phi`` matching their ``j``-th
    vectors, ``gamma1 = p1 + phi p2`` and ``gamma2 = p1 - phi p2``, where
    ``p1``, ``p2`` are the orthonormal coordinates of the two deficiency
    components.
    """

    def __init__(self, sys: PHSystem, n: int, tol: Tolerances = DEFAULT_TOL):
        self.sys = sys
        self.n = n
        self.tol = tol
        self.plus = deficiency_basis(sys, +1, n, tol)
        self.minus = deficiency_basis(sys, -1, n, tol)
        if self.plus.dim != self.minus.dim:
            raise ValidationError("deficiency dimensions differ; no boundary triplet exists")
        try:
            # N = N_on L^{-*}, so orthonormal coordinates are L^* c
            self._Lp = np.linalg.cholesky(self.plus.gram())
            self._Lm = np.linalg.cholesky(self.minus.gram())
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("deficiency basis is numerically dependent") from exc

    def coordinates(self, x: GridFunction) -> tuple[np.ndarray, np.ndarray]:
        dec = domain_decompose(x, self.sys, self.tol, self.plus, self.minus)
        return self._Lp.conj().T @ dec.coeff_plus, self._Lm.conj().T @ dec.coeff_minus

    def gamma1(self, x: GridFunction) -> np.ndarray:
        p1, p2 = self.coordinates(x)
        return p1 + p2

    def gamma2(self, x: GridFunction) -> np.ndarray:
        p1, p2 = self.coordinates(x)
        return p1 - p2

    def __call__(self, x: GridFunction) -> BoundaryPair:
        p1, p2 = self.coordinates(x)
        return BoundaryPair(p1 + p2, p1 - p2)

    def orthonormal_plus(self, j: int) -> GridFunction:
        e = np.zeros(self.sys.d, dtype=np.complex128)
        e[j] = 1.0
        return self.plus.combine(sla.solve_triangular(self._Lp.conj().T, e, lower=False))

    def preimage(self, y1, y2) -> GridFunction:
        """A grid function mapped to ``(y1, y2)``: no ``D(A)`` part."""
        y1 = np.asarray(y1, dtype=np.complex128)
        y2 = np.asarray(y2, dtype=np.complex128)
        u = 0.5 * (y1 + y2)
        v = 0.5 * (y1 - y2)
        cp = sla.solve_triangular(self._Lp.conj().T, u, lower=False)
        cm = sla.solve_triangular(self._Lm.conj().T, v, lower=False)
        return self.plus.combine(cp) + self.minus.combine(cm)

    def green_identity_terms(self, x: GridFunction, y: GridFunction) -> tuple[complex, complex]:
        ax = apply_operator(x, self.sys).scale(-1.0)
        ay = apply_operator(y, self.sys).scale(-1.0)
        lhs = inner_l2(ax, y) + inner_l2(x, ay)
        gx, gy = self(x), self(y)
        rhs = np.vdot(gy.g2, gx.g1) + np.vdot(gy.g1, gx.g2)
        return complex(lhs), complex(rhs)

    def green_identity_residual(self, x: GridFunction, y: GridFunction) -> float:
        lhs, rhs = self.green_identity_terms(x, y)
        return abs(lhs - rhs)


def construct_canonical_triplet(sys: PHSystem, n: int, tol: Tolerances = DEFAULT_TOL) -> CanonicalTriplet:
    return CanonicalTriplet(sys, n, tol)


# }}}


# {{{ fixtures


def transport_system(W=((1.0, 1.0),), a: float = 0.0, b: float = 1.0, H: float = 1.0) -> PHSystem:
    """``x_t = (H x)_xi`` on ``[a, b]``."""
    return PHSystem(1, a, b, [[0.0]], [[1.0]], HamiltonianField.constant([[H]]), W)


def wave_system(W=None, a: float = 0.0, b: float = 1.0) -> PHSystem:
    """First-order wave system with ``P1 = [[0, 1], [1, 0]]`` and ``H = I``."""
    if W is None:
        W = np.hstack([np.eye(2), np.eye(2)])
    P1 = [[0.0, 1.0], [1.0, 0.0]]
    return PHSystem(2, a, b, np.zeros((2, 2)), P1, HamiltonianField.constant(np.eye(2)), W)


def smooth_random_function(rng: np.random.Generator, d: int, a: float, b: float, modes: int = 3):
    """Random complex trigonometric polynomial of low degree, as a callable."""
    k = np.arange(modes + 1)
    ca = rng.standard_normal((modes + 1, d)) + 1j * rng.standard_normal((modes + 1, d))
    cb = rng.standard_normal((modes + 1, d)) + 1j * rng.standard_normal((modes + 1, d))
    ca /= (1 + k[:, None]) ** 2
    cb /= (1 + k[:, None]) ** 2

    def fn(xi):
        s = np.pi * (np.asarray(xi)[:, None] - a) / (b - a)
        return np.cos(s * k) @ ca + np.sin(s * k) @ cb

    return fn


# }}}
