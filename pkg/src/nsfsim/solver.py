"""Time integration of the coupled velocity-temperature system.

One step splits into (i) an implicit-Euler Galerkin update of the
velocity coefficients in which the power-law stress is handled by
fixed-stress Picard iterations (the effective viscosity is frozen at
the previous iterate, making every inner solve linear and SPD), with
the convective term lagged at the same iterate, and (ii) an implicit
finite-volume temperature update with upwind convection at the fresh
velocity, diffusion with conductivities lagged at the old temperature,
and the viscous heating S:Dv evaluated from exactly the velocity and
temperature pair used in the momentum residual.

The rest state and the thermal equilibrium are exact fixed points of
the stepping (up to linear-solver precision); kinetic energy is
dissipated by construction up to the quadrature error of the convective
term, which every step measures and reports rather than assumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import VelocityBasis
from .errors import ConfigError, InvariantViolation, LinearSolverError, PicardError
from .grid import Grid, ScalarField
from .operators import convection_operator, diffusion_operator, face_conductivities
from .state import Problem, SimulationState
from .constitutive import StressLaw, stress_power

_SYM_WEIGHT = np.array([1.0, 1.0, 2.0])


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------

def project_initial_velocity(basis: VelocityBasis, v0_spec) -> np.ndarray:
    """L^2-orthogonal projection of the initial velocity onto the basis.

    Accepts None (rest), a coefficient sequence (padded with zeros), a
    callable points -> (N, 2) velocity sampled at the quadrature points,
    or a config-style dict with kind in {zero, coeffs, mode, random}.
    """
    n = basis.n_modes
    if v0_spec is None:
        return np.zeros(n)
    if callable(v0_spec):
        vals = np.asarray(v0_spec(basis.grid.quad_points()), dtype=float)
        w = basis.grid.quad_w
        return np.einsum("q,qa,kqa->k", w, vals, basis.w_quad)
    if isinstance(v0_spec, dict):
        return _coeffs_from_dict(basis, v0_spec)
    coeffs = np.asarray(v0_spec, dtype=float).ravel()
    if coeffs.size > n:
        raise ConfigError(
            f"initial velocity names {coeffs.size} modes, basis has {n}")
    out = np.zeros(n)
    out[:coeffs.size] = coeffs
    return out


def _coeffs_from_dict(basis: VelocityBasis, spec: dict) -> np.ndarray:
    n = basis.n_modes
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return np.zeros(n)
    if kind == "coeffs":
        return project_initial_velocity(basis, spec["coeffs"])
    if kind == "mode":
        mode = int(spec.get("mode", 1))
        if not 1 <= mode <= n:
            raise ConfigError(f"mode index {mode} outside 1..{n}")
        out = np.zeros(n)
        out[mode - 1] = float(spec.get("amplitude", 1.0))
        return out
    if kind == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        out = rng.standard_normal(n)
        target = float(spec.get("energy", 0.5))
        out *= np.sqrt(2.0 * target) / np.linalg.norm(out)
        return out
    raise ConfigError(f"unknown initial-velocity kind {kind!r}")


def regularize_initial_temperature(theta0: ScalarField, mu_floor: float
                                   ) -> tuple[ScalarField, float]:
    """Clip the sampled initial temperature below at mu_floor.

    Returns the clipped field and the L^1 distance between raw and
    clipped data.  Nonpositive nodes are rejected outright.
    """
    vals = theta0.values
    if np.any(vals <= 0.0) or not np.all(np.isfinite(vals)):
        raise ConfigError(
            "initial temperature must be positive everywhere (mu > 0 requirement)")
    clipped = np.maximum(vals, mu_floor)
    l1 = theta0.grid.integrate_nodal(np.abs(clipped - vals))
    return ScalarField(theta0.grid, clipped), float(l1)


# --------------------------------------------------------------------------
# momentum step
# --------------------------------------------------------------------------

@dataclass
class MomentumReport:
    iterations: int
    gap: float                  # last Picard increment norm
    contraction: float          # last observed gap ratio
    convection_defect: float    # N(c*) . c_new, pure quadrature error
    stress_dissipation: float   # c_new . K(c*) c_new >= 0
    residual_energy: float      # true-equation residual tested with c_new
    implicit_dissipation: float  # ||c_new - c_old||^2 / (2 dt)


def _effective_viscosity(law: StressLaw, nu_theta: np.ndarray,
                         dv: np.ndarray) -> np.ndarray:
    mag2 = dv[:, 0] ** 2 + dv[:, 1] ** 2 + 2.0 * dv[:, 2] ** 2 + law.eps_d ** 2
    with np.errstate(divide="ignore"):
        amp = np.where(mag2 > 0.0, mag2 ** (0.5 * (law.p - 2.0)), 0.0)
    amp = nu_theta * amp
    if not np.all(np.isfinite(amp)):
        raise PicardError(
            "effective viscosity overflowed (p < 2 with vanishing shear); "
            "set stress.eps_d > 0 to regularize")
    return amp


def _stress_vector(basis: VelocityBasis, w: np.ndarray, nu_eff: np.ndarray,
                   dv: np.ndarray) -> np.ndarray:
    vec = (dv * _SYM_WEIGHT * (w * nu_eff)[:, None]).ravel()
    return basis.dw_flat @ vec


def _convection_vector(basis: VelocityBasis, w: np.ndarray,
                       v: np.ndarray) -> np.ndarray:
    outer = np.stack([v[:, 0] ** 2, v[:, 1] ** 2, v[:, 0] * v[:, 1]], axis=-1)
    vec = (outer * _SYM_WEIGHT * w[:, None]).ravel()
    return -(basis.dw_flat @ vec)


def _picard_matrix(basis: VelocityBasis, w: np.ndarray,
                   nu_eff: np.ndarray) -> np.ndarray:
    n = basis.n_modes
    return ((w * nu_eff) @ basis.dw_pair_gram).reshape(n, n)


def momentum_step(problem: Problem, state: SimulationState, dt: float,
                  theta_for_stress: ScalarField | None = None,
                  picard_tol: float = 1e-11, picard_max_iters: int = 60
                  ) -> tuple[np.ndarray, MomentumReport]:
    """Advance the velocity coefficients by one implicit Euler step."""
    basis, grid = problem.basis, problem.grid
    law = problem.stress_law
    theta = theta_for_stress if theta_for_stress is not None else state.theta
    theta_q = grid.interp_to_quad(theta.values)
    nu_theta = law.nu(theta_q)
    w = grid.quad_w

    c_old = state.coeffs
    c_lag = c_old.copy()
    gap_prev = np.inf
    contraction = 0.0
    eye = np.eye(basis.n_modes)

    nq = grid.n_quad
    for it in range(1, picard_max_iters + 1):
        v = (c_lag @ basis.w_flat).reshape(nq, 2)
        dv = (c_lag @ basis.dw_flat).reshape(nq, 3)
        nu_eff = _effective_viscosity(law, nu_theta, dv)
        K = _picard_matrix(basis, w, nu_eff)
        n_vec = _convection_vector(basis, w, v)
        c_new = np.linalg.solve(eye / dt + K, c_old / dt - n_vec)
        gap = float(np.linalg.norm(c_new - c_lag))
        contraction = gap / gap_prev if gap_prev not in (0.0, np.inf) else 0.0
        if gap <= picard_tol * max(1.0, np.linalg.norm(c_new)):
            c_lag = c_new
            break
        if it == picard_max_iters:
            raise PicardError(
                f"Picard stalled after {it} iterations (increment {gap:.3e}, "
                f"contraction {contraction:.3f}); reduce dt below "
                f"~{dt / max(contraction, 1.0):.3e} or increase picard_max_iters")
        gap_prev = gap
        c_lag = c_new

    # diagnostics at the accepted iterate
    v_star = (c_lag @ basis.w_flat).reshape(nq, 2)
    dv_star = (c_lag @ basis.dw_flat).reshape(nq, 3)
    nu_eff = _effective_viscosity(law, nu_theta, dv_star)
    n_star = _convection_vector(basis, w, v_star)
    s_true = _stress_vector(basis, w, nu_eff, dv_star)
    residual = (c_new - c_old) / dt + n_star + s_true
    report = MomentumReport(
        iterations=it,
        gap=gap,
        contraction=contraction,
        convection_defect=float(np.dot(n_star, c_new)),
        stress_dissipation=float(np.dot(s_true, c_new)),
        residual_energy=float(np.dot(residual, c_new)),
        implicit_dissipation=float(np.dot(c_new - c_old, c_new - c_old) / (2.0 * dt)),
    )
    return c_new, report


# --------------------------------------------------------------------------
# temperature step
# --------------------------------------------------------------------------

# factorization reuse for repeated solves with an unchanged operator
# (constant conductivity and frozen velocity give a constant matrix)
_splu_cache: dict = {"key": None, "lu": None}


def _factorized(mat: sp.csr_matrix):
    import hashlib
    digest = hashlib.sha1()
    digest.update(mat.indptr.tobytes())
    digest.update(mat.indices.tobytes())
    digest.update(mat.data.tobytes())
    key = (mat.shape, digest.hexdigest())
    if _splu_cache["key"] != key:
        _splu_cache["key"] = key
        _splu_cache["lu"] = spla.splu(mat.tocsc())
    return _splu_cache["lu"]


@dataclass
class TemperatureReport:
    linear_residual: float
    divergence_defect_max: float
    min_theta: float
    source_min: float
    source_integral: float          # interior cell-volume sum of S:Dv
    internal_energy_residual: float  # independent flux bookkeeping of the update
    source_nodes: np.ndarray = field(repr=False)


def temperature_step(problem: Problem, state: SimulationState, c_new: np.ndarray,
                     dt: float, theta_for_stress: ScalarField | None = None,
                     extra_source=None) -> tuple[ScalarField, TemperatureReport]:
    """Advance the temperature with implicit diffusion and upwind convection.

    The heating S:Dv comes from the same temperature that the momentum
    step used for the stress and from the freshly updated velocity, so
    kinetic dissipation and internal heating are the same discrete field.
    """
    grid, basis = problem.grid, problem.basis
    theta_old = state.theta
    theta_stress = theta_for_stress if theta_for_stress is not None else theta_old

    dv_nodes = np.einsum("k,kjia->jia", c_new, basis.dw_nodes)
    q_nodes = stress_power(problem.stress_law, theta_stress.values, dv_nodes)
    q_scale = 1.0 + float(np.abs(q_nodes).max())
    if q_nodes.min() < -1e-12 * q_scale:
        raise LinearSolverError(
            f"viscous heating dipped to {q_nodes.min():.3e}; "
            "stress and power evaluations are inconsistent")

    kx, ky = face_conductivities(problem.kappa_law, theta_old.values,
                                 problem.face_rule)
    diff = diffusion_operator(grid, kx, ky)
    u_f = np.einsum("k,kji->ji", c_new, basis.u_vfaces)
    v_f = np.einsum("k,kji->ji", c_new, basis.v_hfaces)
    conv = convection_operator(grid, u_f, v_f)

    n = grid.nx * grid.ny
    mat = sp.eye(n, format="csr") / dt + conv.matrix + diff.matrix
    rhs = (theta_old.interior.ravel() / dt + q_nodes[1:-1, 1:-1].ravel()
           + diff.rhs(problem.theta_b) + conv.rhs(problem.theta_b))
    if extra_source is not None:
        rhs = rhs + np.asarray(extra_source, dtype=float).ravel()

    try:
        x = _factorized(mat).solve(rhs)
    except RuntimeError as exc:  # singular factorization
        raise LinearSolverError(f"temperature solve failed: {exc}") from exc
    scale = float(np.abs(rhs).max()) + 1.0
    lin_res = float(np.abs(mat @ x - rhs).max()) / scale
    if lin_res > 1e-9:
        raise LinearSolverError(
            f"temperature linear solve residual {lin_res:.3e} above 1e-9")

    new_vals = problem.theta_b.copy()
    new_vals[1:-1, 1:-1] = x.reshape(grid.ny, grid.nx)
    theta_new = ScalarField(grid, new_vals)

    vol = grid.cell_volume
    source_int = float(q_nodes[1:-1, 1:-1].sum() * vol)
    extra_int = float(np.sum(extra_source) * vol) if extra_source is not None else 0.0
    d_internal = (new_vals[1:-1, 1:-1].sum() - theta_old.interior.sum()) * vol / dt
    bookkeeping = (d_internal + conv.boundary_outflux(new_vals)
                   + diff.boundary_outflux(new_vals) - source_int - extra_int)

    report = TemperatureReport(
        linear_residual=lin_res,
        divergence_defect_max=float(np.abs(conv.divergence_defect).max()),
        min_theta=float(new_vals.min()),
        source_min=float(q_nodes.min()),
        source_integral=source_int,
        internal_energy_residual=float(bookkeeping),
        source_nodes=q_nodes,
    )
    return theta_new, report


# --------------------------------------------------------------------------
# coupled step
# --------------------------------------------------------------------------

@dataclass
class StepReport:
    momentum: MomentumReport
    temperature: TemperatureReport
    sweeps: int


def coupled_step(problem: Problem, state: SimulationState, dt: float,
                 coupling_sweeps: int = 1, picard_tol: float = 1e-11,
                 picard_max_iters: int = 60, extra_source=None
                 ) -> tuple[SimulationState, StepReport]:
    """Momentum with lagged temperature, then temperature with fresh velocity.

    Extra sweeps redo both sub-steps from the same old state with the
    stress temperature refreshed at the newest temperature iterate.
    """
    if coupling_sweeps < 1:
        raise ConfigError("coupling_sweeps must be at least 1")
    theta_s = state.theta
    for sweep in range(coupling_sweeps):
        c_new, mrep = momentum_step(problem, state, dt, theta_for_stress=theta_s,
                                    picard_tol=picard_tol,
                                    picard_max_iters=picard_max_iters)
        theta_new, trep = temperature_step(problem, state, c_new, dt,
                                           theta_for_stress=theta_s,
                                           extra_source=extra_source)
        theta_s = theta_new
    new_state = SimulationState(state.t + dt, c_new, theta_new,
                                source=trep.source_nodes)
    return new_state, StepReport(momentum=mrep, temperature=trep,
                                 sweeps=coupling_sweeps)
