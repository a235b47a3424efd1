"""Immutable problem data and the evolving simulation state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import VelocityBasis
from .constitutive import ConductivityLaw, StressLaw
from .grid import Grid, ScalarField


@dataclass
class Problem:
    """Everything that stays fixed over a run.

    theta_b is a full lattice array of which only the boundary ring is
    read; theta_hat solves the steady conduction problem with that ring
    and mu is the positive floor min(min theta_hat, min theta_0).
    g_level is the truncation level of the equilibrium-distance metric
    g; it must exceed max(||theta_hat||_inf, 2, 2 mu).
    """

    grid: Grid
    basis: VelocityBasis
    stress_law: StressLaw
    kappa_law: ConductivityLaw
    theta_b: np.ndarray = field(repr=False)
    theta_hat: ScalarField = field(repr=False)
    mu: float = 1.0
    face_rule: str = "kirchhoff"
    g_level: float = 0.0
    norm_r: float = 1.5       # L^r(Q) monitor exponent, admissible [1, 5/3)
    norm_s: float = 1.2       # W^{1,s} monitor exponent, admissible [1, 5/4)
    norm_alpha: float = 0.4   # theta^alpha monitor exponent, admissible (0, 1/2)

    def __post_init__(self):
        if self.g_level <= 0.0:
            self.g_level = 1.0 + max(self.theta_hat.max(), 2.0, 2.0 * self.mu)
        if not 1.0 <= self.norm_r < 5.0 / 3.0:
            raise ValueError(
                f"r={self.norm_r} outside the admissible range [1, 5/3)")
        if not 1.0 <= self.norm_s < 5.0 / 4.0:
            raise ValueError(
                f"s={self.norm_s} outside the admissible range [1, 5/4)")
        if not 0.0 < self.norm_alpha < 0.5:
            raise ValueError(
                f"alpha={self.norm_alpha} outside the admissible range (0, 1/2)")


@dataclass
class SimulationState:
    """Time, velocity coefficients, temperature, and the cached heating
    field S:Dv that produced the temperature (nodal, full lattice)."""

    t: float
    coeffs: np.ndarray
    theta: ScalarField
    source: np.ndarray | None = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("velocity coefficients contain non-finite entries")
        if not np.all(np.isfinite(self.theta.values)):
            raise ValueError("temperature field contains non-finite entries")

    def kinetic_energy(self) -> float:
        """(1/2)||v||_2^2; the basis is orthonormal so this is coefficient space."""
        return 0.5 * float(np.dot(self.coeffs, self.coeffs))

    def velocity_nodes(self, basis: VelocityBasis) -> np.ndarray:
        return np.einsum("k,kjia->jia", self.coeffs, basis.w_nodes)

    def sym_gradient_nodes(self, basis: VelocityBasis) -> np.ndarray:
        return np.einsum("k,kjia->jia", self.coeffs, basis.dw_nodes)
