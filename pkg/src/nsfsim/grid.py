"""Structured rectangular grid, nodal fields, and cell-wise Gauss quadrature.

The lattice has (nx+2) x (ny+2) nodes on [0, Lx] x [0, Ly]: nx x ny
interior unknowns surrounded by a Dirichlet boundary ring.  Quadrature
for the spectral velocity machinery is tensor Gauss-Legendre with
quad_order points per direction on each of the (nx+1) x (ny+1) lattice
cells.  Nodal integrals of field quantities use 2D trapezoid weights,
which integrate the constant exactly over the full rectangle.

Array layout convention: nodal arrays have shape (ny+2, nx+2) indexed
[j, i] with i along x; flattened interior vectors are row-major over
the (ny, nx) interior block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Grid:
    """Rectangle [0,Lx] x [0,Ly] with nx x ny interior nodes."""

    def __init__(self, nx: int, ny: int, Lx: float = 1.0, Ly: float = 1.0,
                 quad_order: int = 3):
        if nx < 2 or ny < 2:
            raise ValueError("need at least 2 interior nodes per direction")
        if Lx <= 0.0 or Ly <= 0.0:
            raise ValueError("domain side lengths must be positive")
        if quad_order < 1:
            raise ValueError("quadrature order must be at least 1")
        self.nx, self.ny = int(nx), int(ny)
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.quad_order = int(quad_order)
        self.hx = self.Lx / (self.nx + 1)
        self.hy = self.Ly / (self.ny + 1)
        self.cell_volume = self.hx * self.hy
        self.xs = np.linspace(0.0, self.Lx, self.nx + 2)
        self.ys = np.linspace(0.0, self.Ly, self.ny + 2)
        self.node_x, self.node_y = np.meshgrid(self.xs, self.ys)  # (ny+2, nx+2)

        # tensor Gauss points per lattice cell
        gx, gwx = self._gauss_1d(self.xs, quad_order)
        gy, gwy = self._gauss_1d(self.ys, quad_order)
        self.quad_x = np.tile(gx, gy.size)
        self.quad_y = np.repeat(gy, gx.size)
        self.quad_w = np.outer(gwy, gwx).ravel()
        self.n_quad = self.quad_w.size

        # bilinear interpolation stencil from lattice nodes to quad points
        i0 = np.clip(np.searchsorted(self.xs, self.quad_x) - 1, 0, self.nx)
        j0 = np.clip(np.searchsorted(self.ys, self.quad_y) - 1, 0, self.ny)
        self._q_i0, self._q_j0 = i0, j0
        self._q_sx = (self.quad_x - self.xs[i0]) / self.hx
        self._q_sy = (self.quad_y - self.ys[j0]) / self.hy

        # trapezoid weights over the full lattice
        wx = np.full(self.nx + 2, self.hx)
        wx[0] = wx[-1] = 0.5 * self.hx
        wy = np.full(self.ny + 2, self.hy)
        wy[0] = wy[-1] = 0.5 * self.hy
        self.trap_w = np.outer(wy, wx)

        ring = np.zeros((self.ny + 2, self.nx + 2), dtype=bool)
        ring[0, :] = ring[-1, :] = True
        ring[:, 0] = ring[:, -1] = True
        self.ring_mask = ring

    @staticmethod
    def _gauss_1d(edges: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
        xi, wi = np.polynomial.legendre.leggauss(q)
        h = edges[1] - edges[0]
        left = edges[:-1]
        pts = (left[:, None] + 0.5 * h * (1.0 + xi)[None, :]).ravel()
        wts = np.tile(0.5 * h * wi, left.size)
        return pts, wts

    # --- integration helpers -------------------------------------------------

    def integrate_quad(self, values_at_quad: np.ndarray) -> float:
        """Gauss-quadrature integral of values sampled at (quad_x, quad_y)."""
        return float(np.dot(self.quad_w, values_at_quad))

    def integrate_nodal(self, nodal: np.ndarray) -> float:
        """Trapezoid integral of a full-lattice nodal array."""
        return float(np.sum(self.trap_w * nodal))

    def interp_to_quad(self, nodal: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of a nodal array to the quadrature points."""
        i0, j0 = self._q_i0, self._q_j0
        sx, sy = self._q_sx, self._q_sy
        v00 = nodal[j0, i0]
        v01 = nodal[j0, i0 + 1]
        v10 = nodal[j0 + 1, i0]
        v11 = nodal[j0 + 1, i0 + 1]
        return ((1 - sy) * ((1 - sx) * v00 + sx * v01)
                + sy * ((1 - sx) * v10 + sx * v11))

    def quad_points(self) -> np.ndarray:
        return np.column_stack([self.quad_x, self.quad_y])

    def node_points(self) -> np.ndarray:
        return np.column_stack([self.node_x.ravel(), self.node_y.ravel()])

    def __repr__(self) -> str:  # pragma: no cover
        return (f"Grid(nx={self.nx}, ny={self.ny}, Lx={self.Lx}, Ly={self.Ly}, "
                f"quad_order={self.quad_order})")


@dataclass
class ScalarField:
    """Node-indexed scalar field with a Dirichlet boundary ring."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        expect = (self.grid.ny + 2, self.grid.nx + 2)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != expect:
            raise ValueError(f"field shape {self.values.shape} != lattice {expect}")

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full((grid.ny + 2, grid.nx + 2), float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, np.asarray(fn(grid.node_x, grid.node_y), dtype=float))

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    @property
    def ring(self) -> np.ndarray:
        return self.values[self.grid.ring_mask]

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def integrate(self) -> float:
        return self.grid.integrate_nodal(self.values)


def quadrature_exactness_error(grid: Grid, max_degree: int | None = None) -> float:
    """Worst relative quadrature error over monomials x^a y^b.

    Gauss order q integrates degree 2q-1 exactly per direction; the
    returned number should sit at rounding level for such monomials.
    """
    if max_degree is None:
        max_degree = 2 * grid.quad_order - 1
    worst = 0.0
    for a in range(max_degree + 1):
        for b in range(max_degree + 1):
            num = grid.integrate_quad(grid.quad_x ** a * grid.quad_y ** b)
            exact = (grid.Lx ** (a + 1) / (a + 1)) * (grid.Ly ** (b + 1) / (b + 1))
            worst = max(worst, abs(num - exact) / abs(exact))
    return worst
