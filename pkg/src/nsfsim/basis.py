"""Divergence-free velocity modes from squared-sine stream functions.

Each raw mode is the curl of psi_mn(x,y) = sin^2(m pi x/Lx) sin^2(n pi y/Ly):
w = (d psi/dy, -d psi/dx).  Every mode therefore vanishes on the boundary
and is pointwise divergence-free by construction.  Raw modes are taken in
total-degree order of (m, n) and orthonormalized in the discrete L^2
inner product of the grid quadrature, so the Gram matrix of the final
modes is the identity by construction; the residual orthonormality error
is recorded on the basis object.

All derivative evaluations are closed-form; nothing is differenced.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid


def mode_pairs(n_modes: int) -> list[tuple[int, int]]:
    """First n_modes pairs (m, n), ordered by total degree then by m."""
    pairs = []
    deg = 2
    while len(pairs) < n_modes:
        for m in range(1, deg):
            pairs.append((m, deg - m))
        deg += 1
    return pairs[:n_modes]


def _stream_derivatives(m: int, n: int, x: np.ndarray, y: np.ndarray,
                        Lx: float, Ly: float) -> dict[str, np.ndarray]:
    """First and second partials of psi_mn at the given points."""
    am = m * np.pi / Lx
    an = n * np.pi / Ly
    sx2 = np.sin(am * x) ** 2
    sy2 = np.sin(an * y) ** 2
    s2x = np.sin(2.0 * am * x)
    s2y = np.sin(2.0 * an * y)
    c2x = np.cos(2.0 * am * x)
    c2y = np.cos(2.0 * an * y)
    return {
        "psi_x": am * s2x * sy2,
        "psi_y": an * sx2 * s2y,
        "psi_xx": 2.0 * am * am * c2x * sy2,
        "psi_yy": 2.0 * an * an * sx2 * c2y,
        "psi_xy": am * an * s2x * s2y,
    }


def _raw_velocity(m: int, n: int, x, y, Lx, Ly) -> np.ndarray:
    d = _stream_derivatives(m, n, x, y, Lx, Ly)
    return np.stack([d["psi_y"], -d["psi_x"]], axis=-1)


def _raw_sym_gradient(m: int, n: int, x, y, Lx, Ly) -> np.ndarray:
    # w = (psi_y, -psi_x):  Dw_xx = psi_xy, Dw_yy = -psi_xy,
    # Dw_xy = (psi_yy - psi_xx)/2; trace-free as div w = 0.
    d = _stream_derivatives(m, n, x, y, Lx, Ly)
    return np.stack([d["psi_xy"], -d["psi_xy"],
                     0.5 * (d["psi_yy"] - d["psi_xx"])], axis=-1)


def _raw_divergence(m: int, n: int, x, y, Lx, Ly) -> np.ndarray:
    # d/dx (psi_y) + d/dy (-psi_x), each mixed partial evaluated on its own
    am = m * np.pi / Lx
    an = n * np.pi / Ly
    dx_psi_y = an * am * np.sin(2.0 * am * x) * np.sin(2.0 * an * y)
    dy_psi_x = am * an * np.sin(2.0 * am * x) * np.sin(2.0 * an * y)
    return dx_psi_y - dy_psi_x


class VelocityBasis:
    """Orthonormal divergence-free modes with cached evaluations."""

    def __init__(self, grid: Grid, n_modes: int, rng_seed: int | None = None):
        # rng_seed is accepted for interface stability; the construction
        # is deterministic.
        if n_modes < 1:
            raise ValueError("need at least one velocity mode")
        self.grid = grid
        self.n_modes = int(n_modes)
        self.pairs = mode_pairs(n_modes)

        x, y, w = grid.quad_x, grid.quad_y, grid.quad_w
        raw_w = np.stack([_raw_velocity(m, n, x, y, grid.Lx, grid.Ly)
                          for (m, n) in self.pairs])          # (n, nq, 2)
        raw_dw = np.stack([_raw_sym_gradient(m, n, x, y, grid.Lx, grid.Ly)
                           for (m, n) in self.pairs])         # (n, nq, 3)

        # two-pass modified Gram-Schmidt in the discrete L^2 inner product
        R = np.eye(n_modes)
        for _pass in range(2):
            for k in range(n_modes):
                vk = R[k] @ raw_w.reshape(n_modes, -1)
                vk = vk.reshape(-1, 2)
                for l in range(k):
                    vl = (R[l] @ raw_w.reshape(n_modes, -1)).reshape(-1, 2)
                    proj = float(np.dot(w, np.sum(vk * vl, axis=1)))
                    R[k] -= proj * R[l]
                    vk -= proj * vl
                nrm = float(np.dot(w, np.sum(vk * vk, axis=1)))
                if nrm < 1e-10:
                    m, n = self.pairs[k]
                    raise ValueError(
                        f"stream mode (m={m}, n={n}) is numerically dependent "
                        f"(Gram pivot {nrm:.3e})")
                R[k] /= np.sqrt(nrm)
        self.transform = R

        self.w_quad = np.einsum("kr,rqa->kqa", R, raw_w)
        self.dw_quad = np.einsum("kr,rqa->kqa", R, raw_dw)

        gram = np.einsum("q,kqa,lqa->kl", w, self.w_quad, self.w_quad)
        self.gram_error = float(np.max(np.abs(gram - np.eye(n_modes))))

        # flattened copies for the BLAS-backed quadrature contractions
        self.w_flat = self.w_quad.reshape(n_modes, -1)
        self.dw_flat = self.dw_quad.reshape(n_modes, -1)
        # per-point Gram tensor of symmetric gradients: entry (q, k*n+l)
        # holds Dw_k : Dw_l at quad point q, so a viscosity-weighted
        # stiffness matrix is a single vector-matrix product
        self.dw_pair_gram = np.einsum(
            "kqa,a,lqa->qkl", self.dw_quad, np.array([1.0, 1.0, 2.0]),
            self.dw_quad).reshape(grid.n_quad, n_modes * n_modes)

        # nodal evaluations for source terms and diagnostics
        nx_pts = grid.node_x.ravel()
        ny_pts = grid.node_y.ravel()
        shape = grid.node_x.shape
        self.w_nodes = self._combine(_raw_velocity, nx_pts, ny_pts).reshape(
            (n_modes,) + shape + (2,))
        self.dw_nodes = self._combine(_raw_sym_gradient, nx_pts, ny_pts).reshape(
            (n_modes,) + shape + (3,))

        # normal velocities at cell faces for the upwind convection operator:
        # vertical faces carry u at ((i+1/2)hx, y_j), horizontal faces carry
        # v at (x_i, (j+1/2)hy), interior rows/columns only
        fx = 0.5 * (grid.xs[:-1] + grid.xs[1:])
        fy = grid.ys[1:-1]
        X, Y = np.meshgrid(fx, fy)
        vf = self._combine(_raw_velocity, X.ravel(), Y.ravel())
        self.u_vfaces = vf[..., 0].reshape(n_modes, grid.ny, grid.nx + 1)
        fx = grid.xs[1:-1]
        fy = 0.5 * (grid.ys[:-1] + grid.ys[1:])
        X, Y = np.meshgrid(fx, fy)
        hf = self._combine(_raw_velocity, X.ravel(), Y.ravel())
        self.v_hfaces = hf[..., 1].reshape(n_modes, grid.ny + 1, grid.nx)

    def _combine(self, raw_fn, x, y) -> np.ndarray:
        g = self.grid
        raw = np.stack([raw_fn(m, n, x, y, g.Lx, g.Ly) for (m, n) in self.pairs])
        return np.einsum("kr,rqa->kqa", self.transform, raw)

    # --- evaluation at arbitrary points --------------------------------------

    def velocity_at(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        coeffs = self._check_coeffs(coeffs)
        vals = self._combine(_raw_velocity, points[:, 0], points[:, 1])
        return np.einsum("k,kqa->qa", coeffs, vals)

    def sym_gradient_at(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        coeffs = self._check_coeffs(coeffs)
        vals = self._combine(_raw_sym_gradient, points[:, 0], points[:, 1])
        return np.einsum("k,kqa->qa", coeffs, vals)

    def divergence_at_quad(self) -> np.ndarray:
        """Pointwise divergence of every mode at the quadrature points."""
        g = self.grid
        raw = np.stack([_raw_divergence(m, n, g.quad_x, g.quad_y, g.Lx, g.Ly)
                        for (m, n) in self.pairs])
        return self.transform @ raw

    def _check_coeffs(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_modes,):
            raise ValueError(
                f"coefficient vector has shape {coeffs.shape}, "
                f"basis has {self.n_modes} modes")
        return coeffs


def build_basis(grid: Grid, n_modes: int, rng_seed: int | None = None) -> VelocityBasis:
    return VelocityBasis(grid, n_modes, rng_seed)


def eval_velocity(basis: VelocityBasis, coeffs, points) -> np.ndarray:
    """Velocity field sum_k c_k w_k at the given (N, 2) points."""
    return basis.velocity_at(np.asarray(coeffs, dtype=float),
                             np.asarray(points, dtype=float))


def eval_sym_gradient(basis: VelocityBasis, coeffs, points) -> np.ndarray:
    """Symmetric velocity gradient at the given points, packed (xx, yy, xy)."""
    return basis.sym_gradient_at(np.asarray(coeffs, dtype=float),
                                 np.asarray(points, dtype=float))
