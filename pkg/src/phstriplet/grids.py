"""
Uniform grids, trapezoid weights and first-derivative stencils.

Two difference operators are provided:

* :func:`sbp_first_derivative` is the classical 2-1 summation-by-parts
  operator (central interior, one-sided first-order boundary rows). With the
  trapezoid mass ``Mq`` it satisfies ``Mq D + D^T Mq = diag(-1, 0, ..., 0, 1)``
  exactly, which is what makes the semi-discrete energy balance exact.
* :func:`second_order_derivative` keeps the central interior but uses the
  three-point one-sided rows at the boundary. It is second-order accurate at
  every node and is used to evaluate the differential operator on sampled
  functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_CELLS = 2


@dataclass(frozen=True)
class SpatialGrid:
    a: float
    b: float
    n: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")
        if self.n < MIN_CELLS:
            raise ValueError(f"need at least {MIN_CELLS} cells, got {self.n}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n + 1)

    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.n, self.h)


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def sbp_first_derivative(n: int, h: float) -> np.ndarray:
    """Dense ``(n+1) x (n+1)`` SBP 2-1 first-derivative matrix."""
    D = np.zeros((n + 1, n + 1))
    i = np.arange(1, n)
    D[i, i - 1] = -0.5 / h
    D[i, i + 1] = 0.5 / h
    D[0, 0], D[0, 1] = -1.0 / h, 1.0 / h
    D[n, n - 1], D[n, n] = -1.0 / h, 1.0 / h
    return D


def sbp_boundary_matrix(n: int) -> np.ndarray:
    B = np.zeros((n + 1, n + 1))
    B[0, 0], B[n, n] = -1.0, 1.0
    return B


def second_order_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Differentiate nodal values along axis 0 with second-order stencils everywhere.

    Needs at least three nodes.
    """
    u = np.asarray(values)
    if u.shape[0] < 3:
        raise ValueError("second-order stencils need at least 3 nodes")
    du = np.empty_like(u, dtype=np.result_type(u, np.float64))
    du[1:-1] = (u[2:] - u[:-2]) / (2 * h)
    du[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
    du[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    return du
