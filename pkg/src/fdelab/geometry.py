"""Discrete grids on the periodic line, the axisymmetric sphere and their product.

The sphere factor is sampled at cell centers theta_j = (j + 1/2) * dtheta, so the
polar weight sin^{n-2}(theta) never hits a pole node; the flux form of the
Laplacian then closes itself with exact zero flux at theta = 0 and pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad

from .errors import DomainError
from .problem import sphere_area

MIN_NODES = 16


@dataclass(frozen=True)
class Grid:
    """Nodes and quadrature weights of one spatial domain.

    kind is one of "periodic_line", "polar_arc", "tensor".  Fields on a
    tensor grid are flattened C-style with shape (n_rho, n_theta).
    """

    kind: str
    n: int
    rho: Optional[np.ndarray]
    theta: Optional[np.ndarray]
    weights: np.ndarray
    ell: Optional[float] = None

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def shape(self) -> tuple:
        if self.kind == "tensor":
            return (self.rho.size, self.theta.size)
        return (self.size,)

    @property
    def total_volume(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values: np.ndarray) -> float:
        values = np.asarray(values)
        if values.size != self.size:
            raise DomainError(
                f"field has {values.size} values, grid has {self.size} nodes"
            )
        return float(np.dot(self.weights, values.ravel()))

    def norm_lq(self, values: np.ndarray, q: float) -> float:
        return self.integrate(np.abs(values) ** q) ** (1.0 / q)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "ell": self.ell}
        if self.rho is not None:
            out["n_rho"] = int(self.rho.size)
        if self.theta is not None:
            out["n_theta"] = int(self.theta.size)
        return out


def _polar_cell_measures(n: int, n_theta: int) -> np.ndarray:
    """Exact integrals of sin^{n-2} over each theta cell.

    Exact cell volumes (rather than midpoint values) make the flux-form
    Laplacian consistent at the pole cells and the total volume exact.
    """
    faces = np.arange(n_theta + 1) * (np.pi / n_theta)
    exponent = n - 2
    antider = np.array(
        [quad(lambda t: math.sin(t) ** exponent, faces[j], faces[j + 1],
              epsabs=1e-14, epsrel=1e-13)[0] for j in range(n_theta)]
    )
    return antider


def _polar_nodes_weights(n: int, n_theta: int) -> tuple[np.ndarray, np.ndarray]:
    dtheta = np.pi / n_theta
    theta = (np.arange(n_theta) + 0.5) * dtheta
    weights = sphere_area(n - 1) * _polar_cell_measures(n, n_theta)
    return theta, weights


def periodic_line(n: int, ell: float, n_rho: int) -> Grid:
    """Uniform periodic grid in rho; weights carry the full sphere factor."""
    if n_rho < MIN_NODES:
        raise DomainError(f"resolution {n_rho} < {MIN_NODES}")
    if ell <= 0:
        raise DomainError("period ell must be positive")
    drho = ell / n_rho
    rho = np.arange(n_rho) * drho
    weights = np.full(n_rho, drho * sphere_area(n))
    return Grid("periodic_line", n, rho, None, weights, ell=ell)


def polar_arc(n: int, n_theta: int) -> Grid:
    """Axisymmetric sphere S^{n-1} reduced to the polar angle on (0, pi)."""
    if n_theta < MIN_NODES:
        raise DomainError(f"resolution {n_theta} < {MIN_NODES}")
    theta, weights = _polar_nodes_weights(n, n_theta)
    return Grid("polar_arc", n, None, theta, weights)


def tensor_grid(n: int, ell: float, n_rho: int, n_theta: int) -> Grid:
    if min(n_rho, n_theta) < MIN_NODES:
        raise DomainError(f"resolution {(n_rho, n_theta)} < {MIN_NODES} per axis")
    drho = ell / n_rho
    rho = np.arange(n_rho) * drho
    theta, theta_w = _polar_nodes_weights(n, n_theta)
    weights = np.outer(np.full(n_rho, drho), theta_w).ravel()
    return Grid("tensor", n, rho, theta, weights, ell=ell)


def build_grid(spec, resolution) -> Grid:
    """Grid for a ProblemSpec; resolution is an int or (n_rho, n_theta) pair."""
    if spec.geometry == "sphere":
        (n_theta,) = np.atleast_1d(resolution)
        return polar_arc(spec.n, int(n_theta))
    if spec.geometry == "cylinder_rho":
        (n_rho,) = np.atleast_1d(resolution)
        return periodic_line(spec.n, spec.ell, int(n_rho))
    if spec.geometry == "cylinder_full":
        n_rho, n_theta = np.atleast_1d(resolution)
        return tensor_grid(spec.n, spec.ell, int(n_rho), int(n_theta))
    raise DomainError(f"unknown geometry {spec.geometry!r}")


def _periodic_second_difference(n_rho: int, drho: float) -> sp.csr_matrix:
    main = np.full(n_rho, -2.0)
    off = np.ones(n_rho)
    mat = sp.diags([off, main, off], [-1, 0, 1], shape=(n_rho, n_rho), format="lil")
    mat[0, -1] = 1.0
    mat[-1, 0] = 1.0
    return (mat / drho**2).tocsr()


def _periodic_first_difference(n_rho: int, drho: float) -> sp.csr_matrix:
    off = np.ones(n_rho)
    mat = sp.diags([-off, off], [-1, 1], shape=(n_rho, n_rho), format="lil")
    mat[0, -1] = -1.0
    mat[-1, 0] = 1.0
    return (mat / (2 * drho)).tocsr()


def _polar_laplacian(n: int, n_theta: int) -> sp.csr_matrix:
    """Flux form of v_tt + (n-2) cot(theta) v_t on the cell-centered polar grid."""
    dtheta = np.pi / n_theta
    faces = np.arange(n_theta + 1) * dtheta
    s_face = np.sin(faces) ** (n - 2)  # exactly 0 at both poles
    cell = _polar_cell_measures(n, n_theta)
    lower = s_face[1:-1] / (dtheta * cell[1:])
    upper = s_face[1:-1] / (dtheta * cell[:-1])
    main = -(s_face[:-1] + s_face[1:]) / (dtheta * cell)
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr")


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse discretization of Laplace-Beltrami + a d_rho + b on a Grid."""

    grid: Grid
    a: float
    b: float
    matrix: sp.csr_matrix

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return self.matrix @ values.ravel()

    @property
    def laplacian_only(self) -> sp.csr_matrix:
        drift = _drift_matrix(self.grid, self.a) if self.a != 0.0 else None
        mat = self.matrix - self.b * sp.identity(self.grid.size, format="csr")
        if drift is not None:
            mat = mat - drift
        return mat


def _drift_matrix(grid: Grid, a: float) -> sp.csr_matrix:
    if grid.kind == "periodic_line":
        return a * _periodic_first_difference(grid.rho.size, grid.ell / grid.rho.size)
    if grid.kind == "tensor":
        d1 = _periodic_first_difference(grid.rho.size, grid.ell / grid.rho.size)
        return a * sp.kron(d1, sp.identity(grid.theta.size), format="csr")
    raise DomainError("drift term only applies to rho-bearing grids")


def assemble_operator(grid: Grid, a: float, b: float) -> DiscreteOperator:
    """Second-order operator Delta_g + a d_rho + b as a sparse matrix."""
    if grid.kind == "periodic_line":
        lap = _periodic_second_difference(grid.rho.size, grid.ell / grid.rho.size)
    elif grid.kind == "polar_arc":
        lap = _polar_laplacian(grid.n, grid.theta.size)
    elif grid.kind == "tensor":
        lap_rho = _periodic_second_difference(grid.rho.size, grid.ell / grid.rho.size)
        lap_th = _polar_laplacian(grid.n, grid.theta.size)
        lap = sp.kron(lap_rho, sp.identity(grid.theta.size), format="csr") + sp.kron(
            sp.identity(grid.rho.size), lap_th, format="csr"
        )
    else:
        raise DomainError(f"unknown grid kind {grid.kind!r}")
    mat = lap + b * sp.identity(grid.size, format="csr")
    if grid.kind == "polar_arc":
        a = 0.0  # no rho axis: fields are rho-independent and the drift vanishes
    if a != 0.0:
        mat = mat + _drift_matrix(grid, a)
    return DiscreteOperator(grid=grid, a=a, b=b, matrix=mat.tocsr())


def integrate(grid: Grid, values: np.ndarray) -> float:
    return grid.integrate(values)
