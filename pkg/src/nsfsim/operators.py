"""Finite-volume operators for the temperature equation.

Diffusion is the 5-point divergence-form operator with positive face
conductivities (symmetric M-matrix, rows weakly diagonally dominant);
convection is first-order upwind with face-normal velocities sampled
from the spectral velocity field.  Both operators act per unit cell
volume, are assembled over the nx*ny interior unknowns, and carry the
Dirichlet ring contribution as an affine right-hand-side vector.

Face conductivities support two rules: the harmonic mean of the nodal
kappa values, and the integral mean of kappa over the two nodal
temperatures (the divided difference of the Kirchhoff transform).  The
integral-mean rule makes the discrete operator agree exactly with the
plain Laplacian applied to K(theta), so the Kirchhoff-solved thermal
equilibrium is an exact fixed point of the time stepper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .constitutive import ConductivityLaw
from .grid import Grid


def face_conductivities(law: ConductivityLaw, theta: np.ndarray,
                        rule: str = "kirchhoff") -> tuple[np.ndarray, np.ndarray]:
    """Conductivities on vertical faces (ny, nx+1) and horizontal faces (ny+1, nx).

    Vertical face (j, f) sits between nodes (j, f) and (j, f+1) of an
    interior row; horizontal face (f, i) between (f, i) and (f+1, i) of
    an interior column.
    """
    ta_v, tb_v = theta[1:-1, :-1], theta[1:-1, 1:]
    ta_h, tb_h = theta[:-1, 1:-1], theta[1:, 1:-1]
    if rule == "kirchhoff":
        return law.kirchhoff_mean(ta_v, tb_v), law.kirchhoff_mean(ta_h, tb_h)
    if rule == "harmonic":
        ka_v, kb_v = law.kappa(ta_v), law.kappa(tb_v)
        ka_h, kb_h = law.kappa(ta_h), law.kappa(tb_h)
        return 2.0 * ka_v * kb_v / (ka_v + kb_v), 2.0 * ka_h * kb_h / (ka_h + kb_h)
    raise ValueError(f"unknown face rule {rule!r}")


def _interior_index(grid: Grid) -> np.ndarray:
    return np.arange(grid.nx * grid.ny).reshape(grid.ny, grid.nx)


@dataclass
class DiffusionOperator:
    """A(kappa) on interior unknowns plus the Dirichlet ring rhs map."""

    grid: Grid
    kx: np.ndarray  # (ny, nx+1) vertical-face conductivities
    ky: np.ndarray  # (ny+1, nx) horizontal-face conductivities
    matrix: sp.csr_matrix

    def rhs(self, theta_ring: np.ndarray) -> np.ndarray:
        """Ring contribution so that A_full(theta) = matrix @ int - rhs."""
        g = self.grid
        out = np.zeros((g.ny, g.nx))
        out[:, 0] += self.kx[:, 0] / g.hx ** 2 * theta_ring[1:-1, 0]
        out[:, -1] += self.kx[:, -1] / g.hx ** 2 * theta_ring[1:-1, -1]
        out[0, :] += self.ky[0, :] / g.hy ** 2 * theta_ring[0, 1:-1]
        out[-1, :] += self.ky[-1, :] / g.hy ** 2 * theta_ring[-1, 1:-1]
        return out.ravel()

    def apply_full(self, theta: np.ndarray) -> np.ndarray:
        """Interior residual of -div(kappa grad theta) for a full lattice field."""
        return (self.matrix @ theta[1:-1, 1:-1].ravel() - self.rhs(theta)).reshape(
            self.grid.ny, self.grid.nx)

    def boundary_outflux(self, theta: np.ndarray) -> float:
        """Total diffusive flux leaving the domain through the ring faces.

        Matches the telescoped interior sum of the discrete operator:
        sum of kappa_f (theta_int - theta_ring) * transverse / h over
        the four sides.
        """
        g = self.grid
        flux = np.sum(self.kx[:, 0] * (theta[1:-1, 1] - theta[1:-1, 0])) * g.hy / g.hx
        flux += np.sum(self.kx[:, -1] * (theta[1:-1, -2] - theta[1:-1, -1])) * g.hy / g.hx
        flux += np.sum(self.ky[0, :] * (theta[1, 1:-1] - theta[0, 1:-1])) * g.hx / g.hy
        flux += np.sum(self.ky[-1, :] * (theta[-2, 1:-1] - theta[-1, 1:-1])) * g.hx / g.hy
        return float(flux)


def diffusion_operator(grid: Grid, kx: np.ndarray, ky: np.ndarray) -> DiffusionOperator:
    if np.any(kx <= 0.0) or np.any(ky <= 0.0):
        raise ValueError("face conductivities must be positive")
    nx, ny = grid.nx, grid.ny
    idx = _interior_index(grid)
    tx = kx / grid.hx ** 2
    ty = ky / grid.hy ** 2

    rows, cols, vals = [], [], []

    diag = (tx[:, :-1] + tx[:, 1:] + ty[:-1, :] + ty[1:, :]).ravel()
    rows.append(idx.ravel()); cols.append(idx.ravel()); vals.append(diag)

    # east/west couplings between interior columns
    r = idx[:, :-1].ravel(); c = idx[:, 1:].ravel()
    t = tx[:, 1:-1].ravel()
    rows += [r, c]; cols += [c, r]; vals += [-t, -t]
    # north/south couplings between interior rows
    r = idx[:-1, :].ravel(); c = idx[1:, :].ravel()
    t = ty[1:-1, :].ravel()
    rows += [r, c]; cols += [c, r]; vals += [-t, -t]

    mat = sp.csr_matrix((np.concatenate(vals),
                         (np.concatenate(rows), np.concatenate(cols))),
                        shape=(nx * ny, nx * ny))
    op = DiffusionOperator(grid, kx, ky, mat)
    _assert_m_matrix(mat)
    return op


def _assert_m_matrix(mat: sp.csr_matrix) -> None:
    coo = mat.tocoo()
    off = coo.data[coo.row != coo.col]
    if off.size and off.max() > 1e-14:
        raise AssertionError("diffusion matrix has a positive off-diagonal entry")
    rowsum = np.asarray(mat.sum(axis=1)).ravel()
    if rowsum.min() < -1e-10 * np.abs(coo.data).max():
        raise AssertionError("diffusion matrix lost weak diagonal dominance")


@dataclass
class ConvectionOperator:
    """Upwind convection on interior unknowns from face-normal velocities."""

    grid: Grid
    u_vfaces: np.ndarray  # (ny, nx+1)
    v_hfaces: np.ndarray  # (ny+1, nx)
    matrix: sp.csr_matrix
    divergence_defect: np.ndarray  # (ny, nx) row sums incl. ring couplings

    def rhs(self, theta_ring: np.ndarray) -> np.ndarray:
        """Ring inflow so that C_full(theta) = matrix @ int - rhs."""
        g = self.grid
        out = np.zeros((g.ny, g.nx))
        uw = self.u_vfaces[:, 0]
        out[:, 0] += np.maximum(uw, 0.0) / g.hx * theta_ring[1:-1, 0]
        ue = self.u_vfaces[:, -1]
        out[:, -1] += np.maximum(-ue, 0.0) / g.hx * theta_ring[1:-1, -1]
        vs = self.v_hfaces[0, :]
        out[0, :] += np.maximum(vs, 0.0) / g.hy * theta_ring[0, 1:-1]
        vn = self.v_hfaces[-1, :]
        out[-1, :] += np.maximum(-vn, 0.0) / g.hy * theta_ring[-1, 1:-1]
        return out.ravel()

    def apply_full(self, theta: np.ndarray) -> np.ndarray:
        return (self.matrix @ theta[1:-1, 1:-1].ravel() - self.rhs(theta)).reshape(
            self.grid.ny, self.grid.nx)

    def boundary_outflux(self, theta: np.ndarray) -> float:
        """Net upwinded convective flux leaving through the ring faces."""
        g = self.grid
        uw = self.u_vfaces[:, 0]
        up = np.where(uw >= 0.0, theta[1:-1, 0], theta[1:-1, 1])
        flux = -np.sum(uw * up) * g.hy
        ue = self.u_vfaces[:, -1]
        up = np.where(ue >= 0.0, theta[1:-1, -2], theta[1:-1, -1])
        flux += np.sum(ue * up) * g.hy
        vs = self.v_hfaces[0, :]
        up = np.where(vs >= 0.0, theta[0, 1:-1], theta[1, 1:-1])
        flux -= np.sum(vs * up) * g.hx
        vn = self.v_hfaces[-1, :]
        up = np.where(vn >= 0.0, theta[-2, 1:-1], theta[-1, 1:-1])
        flux += np.sum(vn * up) * g.hx
        return float(flux)


def convection_operator(grid: Grid, u_vfaces: np.ndarray,
                        v_hfaces: np.ndarray) -> ConvectionOperator:
    nx, ny = grid.nx, grid.ny
    idx = _interior_index(grid)

    ue = u_vfaces[:, 1:] / grid.hx   # east face of each cell, (ny, nx)
    uw = u_vfaces[:, :-1] / grid.hx
    vn = v_hfaces[1:, :] / grid.hy
    vs = v_hfaces[:-1, :] / grid.hy

    diag = (np.maximum(ue, 0.0) - np.minimum(uw, 0.0)
            + np.maximum(vn, 0.0) - np.minimum(vs, 0.0)).ravel()
    rows = [idx.ravel()]; cols = [idx.ravel()]; vals = [diag]

    r = idx[:, :-1].ravel(); c = idx[:, 1:].ravel()
    rows += [r, c]; cols += [c, r]
    vals += [np.minimum(ue[:, :-1], 0.0).ravel(),      # east neighbor
             -np.maximum(uw[:, 1:], 0.0).ravel()]      # west neighbor
    r = idx[:-1, :].ravel(); c = idx[1:, :].ravel()
    rows += [r, c]; cols += [c, r]
    vals += [np.minimum(vn[:-1, :], 0.0).ravel(),      # north neighbor
             -np.maximum(vs[1:, :], 0.0).ravel()]      # south neighbor

    mat = sp.csr_matrix((np.concatenate(vals),
                         (np.concatenate(rows), np.concatenate(cols))),
                        shape=(nx * ny, nx * ny))
    defect = (ue - uw) + (vn - vs)
    return ConvectionOperator(grid, u_vfaces, v_hfaces, mat, defect)


def gradient(grid: Grid, nodal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centered-difference gradient at interior nodes, shapes (ny, nx)."""
    gx = (nodal[1:-1, 2:] - nodal[1:-1, :-2]) / (2.0 * grid.hx)
    gy = (nodal[2:, 1:-1] - nodal[:-2, 1:-1]) / (2.0 * grid.hy)
    return gx, gy
