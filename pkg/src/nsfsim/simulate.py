"""Run orchestration: setup from config, stepping loop, records, outputs.

The loop monitors the structural invariants as it goes: the minimum
principle with the accumulated worst-case erosion allowance
dt * (divergence defect) * max(theta) per step, nonnegative entropy
production, and the Jensen gap between entropy and internal energy.  A
breach aborts the run with a structured status instead of continuing.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import config as cfgmod
from .basis import build_basis
from .constitutive import ConductivityLaw, StressLaw, stress_power
from .diagnostics import (BumpTestFunction, DiagnosticsRecord, compute_record,
                          default_bump, instantaneous_norms, jensen_gap)
from .equilibrium import (EquilibriumProblem, boundary_ring_from_sides,
                          compute_mu, solve_theta_hat)
from .errors import ConfigError, InvariantViolation, SolverError
from .grid import Grid, ScalarField
from .output import write_csv, write_json, write_snapshot
from .solver import (coupled_step, project_initial_velocity,
                     regularize_initial_temperature)
from .state import Problem, SimulationState

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2
EXIT_SOLVER = 3

_STATUS_EXIT = {"ok": EXIT_OK, "invariant_breach": EXIT_INVARIANT,
                "solver_failure": EXIT_SOLVER}


@dataclass
class RunParams:
    dt: float
    t_end: float
    record_every: int = 1
    picard_tol: float = 1e-11
    picard_max_iters: int = 60
    coupling_sweeps: int = 1

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_end < self.dt:
            raise ConfigError("need dt > 0 and t_end >= dt")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if self.picard_tol <= 0.0:
            raise ConfigError("picard tolerance must be positive")


@dataclass
class RunResult:
    status: str
    message: str
    records: list[DiagnosticsRecord]
    record_states: list[SimulationState]
    final_state: SimulationState
    summary: dict
    problem: Problem = field(repr=False)

    @property
    def exit_status(self) -> int:
        return _STATUS_EXIT[self.status]


def make_stress_law(cfg: dict[str, str]) -> StressLaw:
    return StressLaw(p=cfgmod.get_float(cfg, "stress.p"),
                     profile=cfgmod.get_str(cfg, "stress.profile"),
                     nu_lo=cfgmod.get_float(cfg, "stress.lo"),
                     nu_hi=cfgmod.get_float(cfg, "stress.hi"),
                     eps_d=cfgmod.get_float(cfg, "stress.eps_d"))


def make_kappa_law(cfg: dict[str, str]) -> ConductivityLaw:
    return ConductivityLaw(profile=cfgmod.get_str(cfg, "kappa.profile"),
                           kappa_lo=cfgmod.get_float(cfg, "kappa.lo"),
                           kappa_hi=cfgmod.get_float(cfg, "kappa.hi"))


def make_grid(cfg: dict[str, str]) -> Grid:
    return Grid(nx=cfgmod.get_int(cfg, "grid.nx"),
                ny=cfgmod.get_int(cfg, "grid.ny"),
                Lx=cfgmod.get_float(cfg, "grid.Lx"),
                Ly=cfgmod.get_float(cfg, "grid.Ly"),
                quad_order=cfgmod.get_int(cfg, "quad.order"))


def _initial_temperature(cfg, grid: Grid, theta_hat: ScalarField) -> ScalarField:
    kind = cfgmod.get_str(cfg, "theta0.kind")
    if kind == "equilibrium":
        return theta_hat.copy()
    if kind == "constant":
        return ScalarField.constant(grid, cfgmod.get_float(cfg, "theta0.value"))
    if kind == "bump":
        amp = cfgmod.get_float(cfg, "theta0.amplitude")
        bump = np.sin(np.pi * grid.node_x / grid.Lx) \
            * np.sin(np.pi * grid.node_y / grid.Ly)
        return ScalarField(grid, theta_hat.values + amp * bump)
    if kind == "file":
        path = cfgmod.get_str(cfg, "theta0.file")
        if not path:
            raise ConfigError("theta0.kind=file requires theta0.file")
        vals = np.loadtxt(path, ndmin=2)
        return ScalarField(grid, vals)
    raise ConfigError(f"unknown theta0.kind {kind!r}")


def _initial_velocity_spec(cfg) -> dict:
    kind = cfgmod.get_str(cfg, "v0.kind")
    spec = {"kind": kind}
    if kind == "coeffs":
        raw = cfgmod.get_str(cfg, "v0.coeffs")
        try:
            spec["coeffs"] = [float(v) for v in raw.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"v0.coeffs={raw!r} is not a comma list") from exc
    elif kind == "mode":
        spec["mode"] = cfgmod.get_int(cfg, "v0.mode")
        spec["amplitude"] = cfgmod.get_float(cfg, "v0.amplitude")
    elif kind == "random":
        spec["seed"] = cfgmod.get_int(cfg, "v0.seed")
        spec["energy"] = cfgmod.get_float(cfg, "v0.energy")
    return spec


def setup(cfg: dict[str, str]) -> tuple[Problem, RunParams, SimulationState, dict]:
    grid = make_grid(cfg)
    stress_law = make_stress_law(cfg)
    kappa_law = make_kappa_law(cfg)
    basis = build_basis(grid, cfgmod.get_int(cfg, "basis.n_modes"))

    theta_b = boundary_ring_from_sides(
        grid,
        left=cfgmod.parse_side(cfg["theta_b.left"]),
        right=cfgmod.parse_side(cfg["theta_b.right"]),
        top=cfgmod.parse_side(cfg["theta_b.top"]),
        bottom=cfgmod.parse_side(cfg["theta_b.bottom"]))
    theta_hat = solve_theta_hat(EquilibriumProblem(
        grid, kappa_law, theta_b, tol=cfgmod.get_float(cfg, "equilibrium.tol")))

    theta0_raw = _initial_temperature(cfg, grid, theta_hat)
    if theta0_raw.min() <= 0.0:
        raise ConfigError(
            "initial temperature violates the positivity requirement mu > 0")
    mu = compute_mu(theta_hat, theta0_raw)
    theta0, l1_change = regularize_initial_temperature(theta0_raw, mu)
    coeffs0 = project_initial_velocity(basis, _initial_velocity_spec(cfg))

    g_level = cfgmod.get_float(cfg, "diag.M")
    problem = Problem(grid=grid, basis=basis, stress_law=stress_law,
                      kappa_law=kappa_law, theta_b=theta_b, theta_hat=theta_hat,
                      mu=mu, face_rule=cfgmod.get_str(cfg, "faces.rule"),
                      g_level=g_level,
                      norm_r=cfgmod.get_float(cfg, "diag.r"),
                      norm_s=cfgmod.get_float(cfg, "diag.s"),
                      norm_alpha=cfgmod.get_float(cfg, "diag.alpha"))
    params = RunParams(dt=cfgmod.get_float(cfg, "run.dt"),
                       t_end=cfgmod.get_float(cfg, "run.t_end"),
                       record_every=cfgmod.get_int(cfg, "run.record_every"),
                       picard_tol=cfgmod.get_float(cfg, "picard.tol"),
                       picard_max_iters=cfgmod.get_int(cfg, "picard.max_iters"),
                       coupling_sweeps=cfgmod.get_int(cfg, "coupling.sweeps"))

    dv0 = np.einsum("k,kjia->jia", coeffs0, basis.dw_nodes)
    source0 = stress_power(stress_law, theta0.values, dv0)
    state0 = SimulationState(0.0, coeffs0, theta0, source=source0)
    info = {"theta0_l1_regularization": l1_change, "mu": mu,
            "basis_gram_error": basis.gram_error}
    return problem, params, state0, info


def _fresh_running(state: SimulationState) -> dict:
    return {"sup_v_l2": float(np.linalg.norm(state.coeffs)),
            "dv_lp_int": 0.0, "v_l5p3_int": 0.0, "theta_lr_int": 0.0,
            "alpha_w12_int": 0.0, "grad_ls_int": 0.0}


def run(cfg: dict[str, str], out_dir: str | None = None,
        extra_source=None) -> RunResult:
    """Execute a configured simulation and (optionally) write artifacts.

    extra_source(t) -> interior array injects a manufactured heating,
    used by the refinement studies.
    """
    problem, params, state, info = setup(cfg)
    grid = problem.grid
    bump = default_bump(grid)
    n_steps = int(round(params.t_end / params.dt))
    if n_steps < 1:
        raise ConfigError("t_end shorter than a single step")

    running = _fresh_running(state)
    records = [compute_record(problem, state, None, 0.0, 0.0, running, bump)]
    record_states = [state]
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_snapshot(os.path.join(out_dir, "snapshot_000000.txt"), state)

    status, message = "ok", ""
    slack_accum = 0.0
    min_theta_run = state.theta.min()
    max_defect = 0.0
    picard_max = 0
    jensen_worst = -np.inf
    prod_min_run = np.inf

    try:
        for k in range(1, n_steps + 1):
            extra = extra_source(state.t + params.dt) if extra_source else None
            state, rep = coupled_step(problem, state, params.dt,
                                      coupling_sweeps=params.coupling_sweeps,
                                      picard_tol=params.picard_tol,
                                      picard_max_iters=params.picard_max_iters,
                                      extra_source=extra)
            inst = instantaneous_norms(problem, state)
            running["sup_v_l2"] = max(running["sup_v_l2"], inst["v_l2"])
            running["dv_lp_int"] += params.dt * inst["dv_lp_power"]
            running["v_l5p3_int"] += params.dt * inst["v_l5p3_power"]
            running["theta_lr_int"] += params.dt * inst["theta_lr_power"]
            running["alpha_w12_int"] += params.dt * inst["alpha_w12_sq"]
            running["grad_ls_int"] += params.dt * inst["grad_ls_power"]

            defect = rep.temperature.divergence_defect_max
            max_defect = max(max_defect, defect)
            slack_accum += params.dt * defect * state.theta.max()
            min_theta_run = min(min_theta_run, rep.temperature.min_theta)
            picard_max = max(picard_max, rep.momentum.iterations)
            allowance = max(slack_accum, 1e-12 * problem.mu)
            if rep.temperature.min_theta < problem.mu - allowance:
                raise InvariantViolation(
                    f"minimum principle violated at step {k}: "
                    f"min theta {rep.temperature.min_theta:.12g} < mu - slack "
                    f"= {problem.mu - allowance:.12g}")

            if k % params.record_every == 0 or k == n_steps:
                rec = compute_record(problem, state, record_states[-1],
                                     rep.momentum.residual_energy,
                                     rep.temperature.internal_energy_residual,
                                     running, bump)
                if rec.entropy_production_min < -1e-12 * (1.0 + abs(rec.dissipation)):
                    raise InvariantViolation(
                        f"entropy production dipped to {rec.entropy_production_min:.3e} "
                        f"at step {k}")
                jensen_worst = max(jensen_worst, jensen_gap(problem, state))
                prod_min_run = min(prod_min_run, rec.entropy_production_min)
                records.append(rec)
                record_states.append(state)
                if out_dir:
                    write_snapshot(os.path.join(out_dir, f"snapshot_{k:06d}.txt"),
                                   state)
    except InvariantViolation as exc:
        status, message = "invariant_breach", str(exc)
    except SolverError as exc:
        status, message = "solver_failure", str(exc)

    summary = {
        "status": status,
        "message": message,
        "steps": n_steps,
        "mu": problem.mu,
        "min_theta_over_run": min_theta_run,
        "min_principle_slack_accumulated": slack_accum,
        "divergence_defect_max": max_defect,
        "picard_iterations_max": picard_max,
        "jensen_gap_worst": None if jensen_worst == -np.inf else jensen_worst,
        "entropy_production_min_over_run":
            None if prod_min_run == np.inf else prod_min_run,
        "setup": info,
        "final": {
            "t": state.t,
            "kinetic_energy": state.kinetic_energy(),
            "decay_v_l2": records[-1].decay_v_l2,
            "decay_theta_l1": records[-1].decay_theta_l1,
            "decay_g_l2": records[-1].decay_g_l2,
        },
        "invariants": {
            "minimum_principle": min_theta_run >= problem.mu - max(
                slack_accum, 1e-12 * problem.mu),
            "entropy_production_nonnegative":
                prod_min_run == np.inf or prod_min_run >= -1e-12,
            "jensen": jensen_worst == -np.inf or jensen_worst <= 1e-10,
        },
    }
    result = RunResult(status=status, message=message, records=records,
                       record_states=record_states, final_state=state,
                       summary=summary, problem=problem)
    if out_dir:
        write_csv(os.path.join(out_dir, "records.csv"), records)
        write_json(os.path.join(out_dir, "summary.json"), summary)
    return result
