"""Manufactured solutions for the temperature sub-problem.

A smooth positive target theta*(t, x, y) is chosen, the source

    f = d(theta*)/dt - div(kappa(theta*) grad theta*)

is derived symbolically (velocity zero), and the implicit stepper is
driven with f as an extra source so its error against theta* measures
the discretization order directly.
"""

from __future__ import annotations

import numpy as np
import sympy

from .constitutive import ConductivityLaw
from .errors import ConfigError
from .grid import Grid, ScalarField

CASES = ("constant", "exp_bump")


class ManufacturedCase:
    """Symbolically differentiated target and source on a given grid."""

    def __init__(self, name: str, grid: Grid, law: ConductivityLaw):
        if name not in CASES:
            raise ConfigError(f"unknown manufactured case {name!r}; pick from {CASES}")
        self.name = name
        self.grid = grid
        self.law = law
        t, x, y = sympy.symbols("t x y", real=True)
        if name == "constant":
            theta = sympy.Integer(2)
        else:
            theta = 2 + sympy.exp(-t) * sympy.sin(sympy.pi * x / grid.Lx) \
                * sympy.sin(sympy.pi * y / grid.Ly)
        if law.profile == "constant":
            kappa = sympy.Float(law.kappa_lo)
        else:
            kappa = law.kappa_lo + (law.kappa_hi - law.kappa_lo) * theta / (1 + theta)
        source = (sympy.diff(theta, t)
                  - sympy.diff(kappa * sympy.diff(theta, x), x)
                  - sympy.diff(kappa * sympy.diff(theta, y), y))
        self._theta = sympy.lambdify((t, x, y), theta, "numpy")
        self._source = sympy.lambdify((t, x, y), sympy.simplify(source), "numpy")

    def theta_field(self, t: float) -> ScalarField:
        g = self.grid
        vals = np.broadcast_to(np.asarray(self._theta(t, g.node_x, g.node_y),
                                          dtype=float), g.node_x.shape)
        return ScalarField(g, vals.copy())

    def source_interior(self, t: float) -> np.ndarray:
        g = self.grid
        vals = np.broadcast_to(np.asarray(self._source(t, g.node_x, g.node_y),
                                          dtype=float), g.node_x.shape)
        return vals[1:-1, 1:-1].copy()

    def boundary_values(self) -> np.ndarray:
        """Ring data; both built-in cases are constant 2 on the boundary."""
        return self.theta_field(0.0).values


def mms_source(case: ManufacturedCase):
    """Interior source f(t) reproducing the manufactured temperature."""
    return case.source_interior
