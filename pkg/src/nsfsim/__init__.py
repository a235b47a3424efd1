"""Desk-scale simulator for heat-conducting power-law incompressible flow.

Divergence-free spectral Galerkin velocity dynamics with a monotone
power-law stress, coupled to a finite-volume temperature equation with
bounded temperature-dependent conductivity, instrumented so that the
structural properties of the system are measured as discrete residuals:
energy balance, the temperature minimum principle, entropy production
and the entropy-balance residual, a priori norm monitors, and the decay
to the thermal equilibrium with zero velocity.
"""

from .basis import VelocityBasis, build_basis, eval_sym_gradient, eval_velocity
from .constitutive import (ConductivityLaw, EnvelopeReport, MonotonicityReport,
                           StressLaw, check_coercivity_growth,
                           check_monotonicity, conductivity, stress,
                           stress_power, sym2, sym_dot, sym_norm)
from .diagnostics import (BumpTestFunction, DiagnosticsRecord, apriori_norms,
                          decay_metrics, entropy_field, entropy_production,
                          truncated_energy_identity, weak_residual_entropy,
                          weak_residual_internal_energy, weak_residual_momentum)
from .equilibrium import (EquilibriumProblem, boundary_ring_from_sides,
                          compute_mu, solve_theta_hat)
from .errors import (ConfigError, InvariantViolation, LinearSolverError,
                     PicardError, SolverError)
from .grid import Grid, ScalarField
from .mms import ManufacturedCase, mms_source
from .simulate import RunParams, RunResult, run, setup
from .solver import (coupled_step, momentum_step, project_initial_velocity,
                     regularize_initial_temperature, temperature_step)
from .state import Problem, SimulationState
from .truncation import (CutoffParams, g_continuity, g_k, kirchhoff,
                         kirchhoff_inverse, t_k, t_k_delta, t_k_delta_d1,
                         t_k_delta_d2)

__version__ = "0.1.0"

__all__ = [
    "VelocityBasis", "build_basis", "eval_sym_gradient", "eval_velocity",
    "ConductivityLaw", "EnvelopeReport", "MonotonicityReport", "StressLaw",
    "check_coercivity_growth", "check_monotonicity", "conductivity", "stress",
    "stress_power", "sym2", "sym_dot", "sym_norm",
    "BumpTestFunction", "DiagnosticsRecord", "apriori_norms", "decay_metrics",
    "entropy_field", "entropy_production", "truncated_energy_identity",
    "weak_residual_entropy", "weak_residual_internal_energy",
    "weak_residual_momentum",
    "EquilibriumProblem", "boundary_ring_from_sides", "compute_mu",
    "solve_theta_hat",
    "ConfigError", "InvariantViolation", "LinearSolverError", "PicardError",
    "SolverError",
    "Grid", "ScalarField",
    "ManufacturedCase", "mms_source",
    "RunParams", "RunResult", "run", "setup",
    "coupled_step", "momentum_step", "project_initial_velocity",
    "regularize_initial_temperature", "temperature_step",
    "Problem", "SimulationState",
    "CutoffParams", "g_continuity", "g_k", "kirchhoff", "kirchhoff_inverse",
    "t_k", "t_k_delta", "t_k_delta_d1", "t_k_delta_d2",
]
