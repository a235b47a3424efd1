"""Structural diagnostics: entropy balance, weak residuals, norm monitors.

Everything here is a pure function of recorded simulation states.  The
centerpiece is the entropy-balance residual: with eta = log(theta) and a
compactly supported space-time test bump phi, the residual of

    -iint eta dphi/dt - iint eta v.grad(phi) + iint kappa(theta) grad(eta).grad(phi)
    = iint (S:Dv/theta) phi + iint kappa(theta) |grad(theta)|^2/theta^2 phi
      + int eta_0 phi(0)

is evaluated with the discrete gradient and trapezoid time quadrature
over record times.  For trajectories produced by the solver it
converges to zero under simultaneous time/space refinement; it is
reported both raw and normalized by the total mass of its terms (floored
at one so that identically vanishing windows report zero).

Weak residuals of the momentum and internal-energy balances, the
truncated-energy identity built from the mollified cutoff, running
space-time norm monitors, and the equilibrium-distance metrics live
here as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import stress_power
from .errors import ConfigError
from .grid import Grid, ScalarField
from .operators import gradient
from .solver import (_convection_vector, _effective_viscosity, _stress_vector)
from .state import Problem, SimulationState
from .truncation import g_continuity, t_k, t_k_delta, t_k_delta_d1, t_k_delta_d2

CSV_COLUMNS = (
    "t", "kinetic_energy", "dissipation", "internal_energy", "entropy",
    "entropy_production_min", "min_theta_margin", "energy_residual",
    "internal_energy_residual", "entropy_residual",
    "sup_v_l2", "dv_lp", "v_l5p3", "theta_lr", "theta_alpha_w12",
    "grad_dtheta_ls", "decay_v_l2", "decay_theta_l1", "decay_g_l2",
)


@dataclass
class DiagnosticsRecord:
    t: float
    kinetic_energy: float
    dissipation: float
    internal_energy: float
    entropy: float
    entropy_production_min: float
    min_theta_margin: float
    energy_residual: float
    internal_energy_residual: float
    entropy_residual: float
    sup_v_l2: float
    dv_lp: float
    v_l5p3: float
    theta_lr: float
    theta_alpha_w12: float
    grad_dtheta_ls: float
    decay_v_l2: float
    decay_theta_l1: float
    decay_g_l2: float

    def row(self) -> list[float]:
        return [getattr(self, name) for name in CSV_COLUMNS]


# --------------------------------------------------------------------------
# pointwise fields
# --------------------------------------------------------------------------

def entropy_field(theta: ScalarField) -> ScalarField:
    """eta = log(theta), nodewise."""
    if theta.values.min() <= 0.0:
        raise ValueError("entropy needs a strictly positive temperature")
    return ScalarField(theta.grid, np.log(theta.values))


def _source_nodes(problem: Problem, state: SimulationState) -> np.ndarray:
    if state.source is not None:
        return state.source
    dv = state.sym_gradient_nodes(problem.basis)
    return stress_power(problem.stress_law, state.theta.values, dv)


def entropy_production(problem: Problem, state: SimulationState) -> np.ndarray:
    """Nodewise S:Dv/theta + kappa(theta)|grad theta|^2/theta^2 at interior nodes.

    Both terms are nonnegative, so the minimum is a direct check of the
    entropy-production sign.
    """
    grid = problem.grid
    theta = state.theta.values
    if theta.min() <= 0.0:
        raise ValueError("entropy production needs a positive temperature")
    q = _source_nodes(problem, state)[1:-1, 1:-1]
    gx, gy = gradient(grid, theta)
    th = theta[1:-1, 1:-1]
    kap = problem.kappa_law.kappa(th)
    return q / th + kap * (gx ** 2 + gy ** 2) / th ** 2


def decay_metrics(problem: Problem, state: SimulationState
                  ) -> tuple[float, float, float]:
    """(||v||_2, ||theta - theta_hat||_L1, ||g(theta - theta_hat)||_L2)."""
    grid = problem.grid
    diff = state.theta.values - problem.theta_hat.values
    l1 = grid.integrate_nodal(np.abs(diff))
    g = g_continuity(problem.g_level, state.theta.values, problem.theta_hat.values)
    g2 = grid.integrate_nodal(g * g)
    return (float(np.linalg.norm(state.coeffs)), float(l1), float(np.sqrt(g2)))


def chain_rule_defect(problem: Problem, state: SimulationState) -> float:
    """L1 mismatch between grad(log theta) and (grad theta)/theta, both discrete."""
    grid = problem.grid
    theta = state.theta.values
    ex, ey = gradient(grid, np.log(theta))
    gx, gy = gradient(grid, theta)
    th = theta[1:-1, 1:-1]
    kap = problem.kappa_law.kappa(th)
    mism = np.hypot(ex - gx / th, ey - gy / th)
    return float(np.sum(kap * mism) * grid.cell_volume)


def jensen_gap(problem: Problem, state: SimulationState) -> float:
    """int eta - |Omega| log(mean theta); concavity keeps this <= 0."""
    grid = problem.grid
    area = grid.Lx * grid.Ly
    mean = state.theta.integrate() / area
    ent = grid.integrate_nodal(np.log(state.theta.values))
    return float(ent - area * np.log(mean))


# --------------------------------------------------------------------------
# test functions
# --------------------------------------------------------------------------

def _bspline(s: np.ndarray) -> np.ndarray:
    a = np.abs(s)
    inner = 2.0 / 3.0 - a ** 2 + 0.5 * a ** 3
    outer = (2.0 - a) ** 3 / 6.0
    return np.where(a < 1.0, inner, np.where(a < 2.0, outer, 0.0))


def _bspline_d(s: np.ndarray) -> np.ndarray:
    a = np.abs(s)
    inner = -2.0 * a + 1.5 * a ** 2
    outer = -0.5 * (2.0 - a) ** 2
    return np.sign(s) * np.where(a < 1.0, inner, np.where(a < 2.0, outer, 0.0))


@dataclass(frozen=True)
class BumpTestFunction:
    """Tensor cubic B-spline bump, compactly supported in space and time.

    The spatial support is [cx - wx/2, cx + wx/2] x [cy - wy/2, cy + wy/2]
    and must lie strictly inside the domain.  A None time center makes
    the bump time-independent (for windowed balances); otherwise the
    time factor is supported on [tc - tw/2, tc + tw/2].
    """

    cx: float
    cy: float
    wx: float
    wy: float
    tc: float | None = None
    tw: float = 1.0

    def validate_space(self, grid: Grid) -> None:
        if not (0.0 < self.cx - self.wx / 2 and self.cx + self.wx / 2 < grid.Lx
                and 0.0 < self.cy - self.wy / 2 and self.cy + self.wy / 2 < grid.Ly):
            raise ValueError("test bump support must lie strictly inside the domain")

    def space_values(self, grid: Grid) -> np.ndarray:
        sx = 4.0 * (grid.node_x - self.cx) / self.wx
        sy = 4.0 * (grid.node_y - self.cy) / self.wy
        return _bspline(sx) * _bspline(sy)

    def space_gradient(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        sx = 4.0 * (grid.node_x - self.cx) / self.wx
        sy = 4.0 * (grid.node_y - self.cy) / self.wy
        gx = _bspline_d(sx) * (4.0 / self.wx) * _bspline(sy)
        gy = _bspline(sx) * _bspline_d(sy) * (4.0 / self.wy)
        return gx, gy

    def time_value(self, t: float) -> float:
        if self.tc is None:
            return 1.0
        return float(_bspline(np.asarray(4.0 * (t - self.tc) / self.tw)))

    def time_derivative(self, t: float) -> float:
        if self.tc is None:
            return 0.0
        return float(_bspline_d(np.asarray(4.0 * (t - self.tc) / self.tw))
                     * 4.0 / self.tw)

    def vanishes_after(self, t_end: float) -> bool:
        return self.tc is None or self.tc + self.tw / 2 <= t_end + 1e-12


def default_bump(grid: Grid, t_start: float | None = None,
                 t_end: float | None = None) -> BumpTestFunction:
    """Bump over the middle half of the domain; in time, supported from the
    window start and vanishing strictly before the window end."""
    if t_start is None:
        return BumpTestFunction(cx=grid.Lx / 2, cy=grid.Ly / 2,
                                wx=grid.Lx / 2, wy=grid.Ly / 2)
    span = t_end - t_start
    return BumpTestFunction(cx=grid.Lx / 2, cy=grid.Ly / 2,
                            wx=grid.Lx / 2, wy=grid.Ly / 2,
                            tc=t_start, tw=1.8 * span)


# --------------------------------------------------------------------------
# weak residuals
# --------------------------------------------------------------------------

def _ivol(grid: Grid, interior: np.ndarray) -> float:
    return float(np.sum(interior) * grid.cell_volume)


def _trapz(ts: np.ndarray, vals: np.ndarray) -> float:
    return float(np.trapezoid(vals, ts))


def _check_window(states) -> np.ndarray:
    if len(states) < 2:
        raise ValueError("need at least two records to form a window")
    ts = np.array([s.t for s in states])
    if np.any(np.diff(ts) <= 0.0):
        raise ValueError("record times must be strictly increasing")
    return ts


def weak_residual_momentum(problem: Problem, states, mode_index: int) -> float:
    """Time-discrete residual of the momentum balance against one basis mode.

    Sums dt * [(c_b - c_a)/dt + N(c_b) + s(c_b; theta_a)]_j over the
    window intervals; for solver-produced records at every step this is
    the Picard stopping defect plus quadrature error.
    """
    basis, grid = problem.basis, problem.grid
    if not 0 <= mode_index < basis.n_modes:
        raise ValueError(f"mode index {mode_index} outside 0..{basis.n_modes - 1}")
    _check_window(states)
    w = grid.quad_w
    total = 0.0
    for a, b in zip(states[:-1], states[1:]):
        dt = b.t - a.t
        v = (b.coeffs @ basis.w_flat).reshape(grid.n_quad, 2)
        dv = (b.coeffs @ basis.dw_flat).reshape(grid.n_quad, 3)
        nu_theta = problem.stress_law.nu(grid.interp_to_quad(a.theta.values))
        nu_eff = _effective_viscosity(problem.stress_law, nu_theta, dv)
        s_vec = _stress_vector(basis, w, nu_eff, dv)
        n_vec = _convection_vector(basis, w, v)
        rate = (b.coeffs[mode_index] - a.coeffs[mode_index]) / dt
        total += dt * (rate + n_vec[mode_index] + s_vec[mode_index])
    return total


def _phi_checks(problem: Problem, states, phi: BumpTestFunction) -> np.ndarray:
    ts = _check_window(states)
    phi.validate_space(problem.grid)
    if not phi.vanishes_after(ts[-1]):
        raise ValueError("test bump must vanish before the window end")
    return ts


def weak_residual_internal_energy(problem: Problem, states,
                                  phi: BumpTestFunction,
                                  extra_source=None) -> float:
    """Residual of the internal-energy weak form over the record window.

    All five terms are integrated with the discrete gradient, trapezoid
    time quadrature, and the initial-datum term from the first record.
    extra_source(t) supplies a manufactured interior heating if the
    trajectory was driven by one.
    """
    grid = problem.grid
    ts = _phi_checks(problem, states, phi)
    phi_s = phi.space_values(grid)[1:-1, 1:-1]
    phi_gx, phi_gy = phi.space_gradient(grid)
    phi_gx, phi_gy = phi_gx[1:-1, 1:-1], phi_gy[1:-1, 1:-1]

    vals = np.zeros(len(states))
    for i, st in enumerate(states):
        pt = phi.time_value(st.t)
        pdt = phi.time_derivative(st.t)
        theta = st.theta.values
        th = theta[1:-1, 1:-1]
        v = st.velocity_nodes(problem.basis)[1:-1, 1:-1]
        gx, gy = gradient(grid, theta)
        kap = problem.kappa_law.kappa(th)
        q = _source_nodes(problem, st)[1:-1, 1:-1]
        term = -_ivol(grid, th * phi_s) * pdt
        term -= _ivol(grid, th * (v[..., 0] * phi_gx + v[..., 1] * phi_gy)) * pt
        term += _ivol(grid, kap * (gx * phi_gx + gy * phi_gy)) * pt
        term -= _ivol(grid, q * phi_s) * pt
        if extra_source is not None:
            term -= _ivol(grid, np.asarray(extra_source(st.t)) * phi_s) * pt
        vals[i] = term
    init = _ivol(grid, states[0].theta.values[1:-1, 1:-1] * phi_s) \
        * phi.time_value(ts[0])
    return _trapz(ts, vals) - init


def weak_residual_entropy(problem: Problem, states, phi: BumpTestFunction,
                          eta_scale: float = 1.0) -> tuple[float, float]:
    """Residual of the entropy balance over the window, raw and normalized.

    eta_scale multiplies the entropy field (and its initial datum) so a
    deliberately perturbed entropy can be fed through the same check;
    the production terms are left untouched.
    """
    grid = problem.grid
    ts = _phi_checks(problem, states, phi)
    phi_s = phi.space_values(grid)[1:-1, 1:-1]
    phi_gx, phi_gy = phi.space_gradient(grid)
    phi_gx, phi_gy = phi_gx[1:-1, 1:-1], phi_gy[1:-1, 1:-1]

    n_terms = 6
    vals = np.zeros((len(states), n_terms))
    for i, st in enumerate(states):
        pt = phi.time_value(st.t)
        pdt = phi.time_derivative(st.t)
        theta = st.theta.values
        if theta.min() <= 0.0:
            raise ValueError("entropy residual needs a positive temperature")
        th = theta[1:-1, 1:-1]
        eta = eta_scale * np.log(theta)
        et = eta[1:-1, 1:-1]
        v = st.velocity_nodes(problem.basis)[1:-1, 1:-1]
        egx, egy = gradient(grid, eta)
        gx, gy = gradient(grid, theta)
        kap = problem.kappa_law.kappa(th)
        q = _source_nodes(problem, st)[1:-1, 1:-1]
        vals[i, 0] = -_ivol(grid, et * phi_s) * pdt
        vals[i, 1] = -_ivol(grid, et * (v[..., 0] * phi_gx + v[..., 1] * phi_gy)) * pt
        vals[i, 2] = _ivol(grid, kap * (egx * phi_gx + egy * phi_gy)) * pt
        vals[i, 3] = -_ivol(grid, q / th * phi_s) * pt
        vals[i, 4] = -_ivol(grid, kap * (gx ** 2 + gy ** 2) / th ** 2 * phi_s) * pt
    eta0 = eta_scale * np.log(states[0].theta.values[1:-1, 1:-1])
    init = _ivol(grid, eta0 * phi_s) * phi.time_value(ts[0])
    residual = sum(_trapz(ts, vals[:, k]) for k in range(5)) - init
    masses = sum(abs(_trapz(ts, vals[:, k])) for k in range(5)) + abs(init)
    return float(residual), float(residual) / max(masses, 1.0)


def entropy_balance_window(problem: Problem, s0: SimulationState,
                           s1: SimulationState, phi: BumpTestFunction,
                           ) -> tuple[float, float]:
    """Entropy balance over one step window with a static spatial bump:

        int (eta1 - eta0) phi + int_t [-eta v.grad(phi)
            + kappa grad(eta).grad(phi) - production phi] dt
    """
    grid = problem.grid
    phi.validate_space(grid)
    phi_s = phi.space_values(grid)[1:-1, 1:-1]
    phi_gx, phi_gy = phi.space_gradient(grid)
    phi_gx, phi_gy = phi_gx[1:-1, 1:-1], phi_gy[1:-1, 1:-1]
    ts = np.array([s0.t, s1.t])

    vals = np.zeros((2, 4))
    for i, st in enumerate((s0, s1)):
        theta = st.theta.values
        th = theta[1:-1, 1:-1]
        eta = np.log(theta)
        et = eta[1:-1, 1:-1]
        v = st.velocity_nodes(problem.basis)[1:-1, 1:-1]
        egx, egy = gradient(grid, eta)
        gx, gy = gradient(grid, theta)
        kap = problem.kappa_law.kappa(th)
        q = _source_nodes(problem, st)[1:-1, 1:-1]
        vals[i, 0] = -_ivol(grid, et * (v[..., 0] * phi_gx + v[..., 1] * phi_gy))
        vals[i, 1] = _ivol(grid, kap * (egx * phi_gx + egy * phi_gy))
        vals[i, 2] = -_ivol(grid, q / th * phi_s)
        vals[i, 3] = -_ivol(grid, kap * (gx ** 2 + gy ** 2) / th ** 2 * phi_s)
    delta = _ivol(grid, (np.log(s1.theta.values) - np.log(s0.theta.values))[1:-1, 1:-1]
                  * phi_s)
    residual = delta + sum(_trapz(ts, vals[:, k]) for k in range(4))
    masses = abs(delta) + sum(abs(_trapz(ts, vals[:, k])) for k in range(4))
    return float(residual), float(residual) / max(masses, 1.0)


def truncated_energy_identity(problem: Problem, states, M: float,
                              delta: float) -> dict:
    """Residual of the truncated-energy identity over the record window.

    With the mollified cutoff at level M the identity reads

        iint kappa |T''_{M,d}(theta)| |grad theta|^2
          = int (theta_0 - T(theta_0)) - int (theta - T(theta))(t_end)
            + iint (1 - T'(theta)) S:Dv.

    When M - delta exceeds the temperature range every term is zero.
    """
    grid = problem.grid
    ts = _check_window(states)
    ring_max = float(problem.theta_b[grid.ring_mask].max())
    if M <= 2.0 * ring_max:
        raise ConfigError(
            f"truncation level M={M} must exceed twice the boundary maximum "
            f"{ring_max}")
    if not 0.0 < delta < M / 2.0:
        raise ConfigError("mollification radius must satisfy 0 < delta < M/2")

    lhs_vals = np.zeros(len(states))
    src_vals = np.zeros(len(states))
    for i, st in enumerate(states):
        theta = st.theta.values
        th = theta[1:-1, 1:-1]
        gx, gy = gradient(grid, theta)
        kap = problem.kappa_law.kappa(th)
        curv = np.abs(t_k_delta_d2(M, delta, th))
        lhs_vals[i] = _ivol(grid, kap * curv * (gx ** 2 + gy ** 2))
        q = _source_nodes(problem, st)[1:-1, 1:-1]
        slope = t_k_delta_d1(M, delta, th)
        src_vals[i] = _ivol(grid, (1.0 - slope) * q)

    def excess(st: SimulationState) -> float:
        th = st.theta.values[1:-1, 1:-1]
        return _ivol(grid, th - t_k_delta(M, delta, th))

    lhs = _trapz(ts, lhs_vals)
    rhs = excess(states[0]) - excess(states[-1]) + _trapz(ts, src_vals)
    return {"lhs": lhs, "rhs": rhs, "residual": lhs - rhs}


# --------------------------------------------------------------------------
# norm monitors
# --------------------------------------------------------------------------

def _validate_exponents(p: float, r: float, s: float, alpha: float) -> None:
    if not p >= 1.0:
        raise ConfigError(f"p={p} must be at least 1")
    if not 1.0 <= r < 5.0 / 3.0:
        raise ConfigError(f"r={r} outside the admissible range [1, 5/3)")
    if not 1.0 <= s < 5.0 / 4.0:
        raise ConfigError(f"s={s} outside the admissible range [1, 5/4)")
    if not 0.0 < alpha < 0.5:
        raise ConfigError(f"alpha={alpha} outside the admissible range (0, 1/2)")


def instantaneous_norms(problem: Problem, state: SimulationState) -> dict:
    """Spatial norm powers entering the running space-time monitors."""
    grid, basis = problem.grid, problem.basis
    p = problem.stress_law.p
    r, s, alpha = problem.norm_r, problem.norm_s, problem.norm_alpha

    v = (state.coeffs @ basis.w_flat).reshape(grid.n_quad, 2)
    dv = (state.coeffs @ basis.dw_flat).reshape(grid.n_quad, 3)
    dv_mag = np.sqrt(dv[:, 0] ** 2 + dv[:, 1] ** 2 + 2.0 * dv[:, 2] ** 2)
    v_mag = np.hypot(v[:, 0], v[:, 1])

    theta = state.theta.values
    th_a = theta ** alpha
    gax, gay = gradient(grid, th_a)
    dx, dy_ = gradient(grid, theta - problem.theta_hat.values)

    return {
        "v_l2": float(np.linalg.norm(state.coeffs)),
        "dv_lp_power": grid.integrate_quad(dv_mag ** p),
        "v_l5p3_power": grid.integrate_quad(v_mag ** (5.0 * p / 3.0)),
        "theta_lr_power": grid.integrate_nodal(theta ** r),
        "alpha_w12_sq": (grid.integrate_nodal(th_a ** 2)
                         + _ivol(grid, gax ** 2 + gay ** 2)),
        "grad_ls_power": _ivol(grid, np.hypot(dx, dy_) ** s),
    }


def apriori_norms(problem: Problem, states, p: float | None = None,
                  r: float | None = None, s: float | None = None,
                  alpha: float | None = None) -> dict:
    """Running space-time norms over the record window (trapezoid in time)."""
    p = problem.stress_law.p if p is None else p
    r = problem.norm_r if r is None else r
    s = problem.norm_s if s is None else s
    alpha = problem.norm_alpha if alpha is None else alpha
    _validate_exponents(p, r, s, alpha)
    ts = _check_window(states)

    override = Problem.__new__(Problem)
    override.__dict__.update(problem.__dict__)
    override.norm_r, override.norm_s, override.norm_alpha = r, s, alpha

    rows = [instantaneous_norms(override, st) for st in states]
    acc = {k: np.array([row[k] for row in rows]) for k in rows[0]}
    return {
        "sup_v_l2": float(np.max(acc["v_l2"])),
        "dv_lp": _trapz(ts, acc["dv_lp_power"]) ** (1.0 / p),
        "v_l5p3": _trapz(ts, acc["v_l5p3_power"]) ** (3.0 / (5.0 * p)),
        "theta_lr": _trapz(ts, acc["theta_lr_power"]) ** (1.0 / r),
        "theta_alpha_w12": np.sqrt(_trapz(ts, acc["alpha_w12_sq"])),
        "grad_dtheta_ls": _trapz(ts, acc["grad_ls_power"]) ** (1.0 / s),
    }


# --------------------------------------------------------------------------
# per-record assembly
# --------------------------------------------------------------------------

def compute_record(problem: Problem, state: SimulationState,
                   prev_state: SimulationState | None,
                   energy_residual: float, internal_energy_residual: float,
                   running: dict, bump: BumpTestFunction) -> DiagnosticsRecord:
    grid = problem.grid
    p = problem.stress_law.p
    source = _source_nodes(problem, state)
    dissipation = grid.integrate_nodal(source)
    prod_min = float(entropy_production(problem, state).min())
    v_l2, th_l1, g_l2 = decay_metrics(problem, state)
    if prev_state is not None:
        _, entropy_res = entropy_balance_window(problem, prev_state, state, bump)
    else:
        entropy_res = 0.0
    return DiagnosticsRecord(
        t=state.t,
        kinetic_energy=state.kinetic_energy(),
        dissipation=float(dissipation),
        internal_energy=state.theta.integrate(),
        entropy=grid.integrate_nodal(np.log(state.theta.values)),
        entropy_production_min=prod_min,
        min_theta_margin=state.theta.min() - problem.mu,
        energy_residual=energy_residual,
        internal_energy_residual=internal_energy_residual,
        entropy_residual=entropy_res,
        sup_v_l2=running["sup_v_l2"],
        dv_lp=running["dv_lp_int"] ** (1.0 / p),
        v_l5p3=running["v_l5p3_int"] ** (3.0 / (5.0 * p)),
        theta_lr=running["theta_lr_int"] ** (1.0 / problem.norm_r),
        theta_alpha_w12=float(np.sqrt(running["alpha_w12_int"])),
        grad_dtheta_ls=running["grad_ls_int"] ** (1.0 / problem.norm_s),
        decay_v_l2=v_l2,
        decay_theta_l1=th_l1,
        decay_g_l2=g_l2,
    )
