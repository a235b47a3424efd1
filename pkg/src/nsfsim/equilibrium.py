"""Thermal equilibrium: the steady conduction problem with Dirichlet data.

The temperature-dependent conductivity is removed exactly by the
Kirchhoff transform: u = K(theta) turns -div(kappa(theta) grad theta) = 0
into the plain Laplace problem A(1) u = 0 with transformed boundary
data, which is solved by Jacobi-preconditioned conjugate gradients and
mapped back nodewise through the strictly increasing inverse transform.
The M-matrix structure of the discrete Laplacian bounds the result
between the boundary extremes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constitutive import ConductivityLaw
from .errors import ConfigError, InvariantViolation, LinearSolverError
from .grid import Grid, ScalarField
from .truncation import kirchhoff_inverse


@dataclass
class EquilibriumProblem:
    grid: Grid
    law: ConductivityLaw
    theta_b: np.ndarray = field(repr=False)  # full lattice array; only the ring is read
    tol: float = 1e-8                        # bound on ||A(1) K(theta_hat)||_inf
    s_ref: float = 1.0

    def __post_init__(self):
        expect = (self.grid.ny + 2, self.grid.nx + 2)
        self.theta_b = np.asarray(self.theta_b, dtype=float)
        if self.theta_b.shape != expect:
            raise ValueError(f"boundary field shape {self.theta_b.shape} != {expect}")
        ring = self.theta_b[self.grid.ring_mask]
        if not np.all(np.isfinite(ring)) or ring.min() <= 0.0:
            raise ConfigError("boundary temperature must have a positive floor")


def boundary_ring_from_sides(grid: Grid, left, right, top, bottom) -> np.ndarray:
    """Assemble a lattice array whose ring holds the per-side Dirichlet data.

    Each side is a constant or a callable of the normalized arclength
    s in [0, 1] along that side (x/Lx for top/bottom, y/Ly for
    left/right).  Corners take the left/right value.
    """
    def side(spec, s):
        if callable(spec):
            return np.asarray(spec(s), dtype=float) * np.ones_like(s)
        return np.full_like(s, float(spec))

    vals = np.zeros((grid.ny + 2, grid.nx + 2))
    sx = grid.xs / grid.Lx
    sy = grid.ys / grid.Ly
    vals[0, :] = side(bottom, sx)
    vals[-1, :] = side(top, sx)
    vals[:, 0] = side(left, sy)
    vals[:, -1] = side(right, sy)
    return vals


def _laplacian_interior(grid: Grid) -> sp.csr_matrix:
    from .operators import diffusion_operator
    ones_v = np.ones((grid.ny, grid.nx + 1))
    ones_h = np.ones((grid.ny + 1, grid.nx))
    return diffusion_operator(grid, ones_v, ones_h)


def solve_theta_hat(problem: EquilibriumProblem) -> ScalarField:
    """Solve the steady problem; the result satisfies the discrete
    maximum principle min theta_b <= theta_hat <= max theta_b nodewise."""
    g = problem.grid
    law = problem.law
    op = _laplacian_interior(g)

    u = np.zeros((g.ny + 2, g.nx + 2))
    ring = g.ring_mask
    u[ring] = law.kirchhoff(problem.theta_b[ring], problem.s_ref)
    b = op.rhs(u)

    diag = op.matrix.diagonal()
    precond = spla.LinearOperator(op.matrix.shape, matvec=lambda r: r / diag)
    x, info = spla.cg(op.matrix, b, rtol=1e-14, atol=0.0,
                      maxiter=40 * g.nx * g.ny, M=precond)
    if info != 0:
        res = np.linalg.norm(op.matrix @ x - b, np.inf)
        raise LinearSolverError(
            f"conjugate gradients did not converge (info={info}, residual {res:.3e})")
    u[1:-1, 1:-1] = x.reshape(g.ny, g.nx)

    if law.profile == "constant":
        theta = problem.s_ref + u / law.kappa_lo
    else:
        theta = u.copy()
        theta[ring] = problem.theta_b[ring]
        theta[1:-1, 1:-1] = kirchhoff_inverse(
            law, u[1:-1, 1:-1], problem.s_ref)

    residual = np.abs(op.apply_full(law.kirchhoff(theta, problem.s_ref))).max()
    if residual > problem.tol:
        raise LinearSolverError(
            f"Kirchhoff consistency residual {residual:.3e} exceeds {problem.tol:.1e}")

    lo, hi = problem.theta_b[ring].min(), problem.theta_b[ring].max()
    slack = 1e-10 * (1.0 + abs(hi))
    if theta.min() < lo - slack or theta.max() > hi + slack:
        raise InvariantViolation("discrete maximum principle violated")
    return ScalarField(g, theta)


def compute_mu(theta_hat: ScalarField, theta0: ScalarField) -> float:
    """Positive floor min over both fields, boundary rings included."""
    mu = min(theta_hat.min(), theta0.min())
    if not np.isfinite(mu) or mu <= 0.0:
        raise ConfigError(
            f"temperature floor must be positive, got {mu}; initial and "
            "equilibrium temperatures must satisfy mu > 0")
    return float(mu)
