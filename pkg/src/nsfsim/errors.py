"""Exception taxonomy shared across the package.

ConfigError covers unusable inputs (bad keys, nonpositive data).
SolverError and its subclasses cover numerical failures inside a run;
InvariantViolation marks a structural property (minimum principle,
monotone ladder, ...) measured outside its tolerance.
"""


class ConfigError(Exception):
    """Unusable configuration or problem data."""


class SolverError(RuntimeError):
    """A numerical solve failed."""


class PicardError(SolverError):
    """The fixed-stress Picard iteration did not converge."""


class LinearSolverError(SolverError):
    """A linear system solve failed or left too large a residual."""


class InvariantViolation(RuntimeError):
    """A monitored structural property left its tolerance."""
