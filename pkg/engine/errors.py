"""
Exception hierarchy.
Each family carries the exit code the command-line front end reports.
"""


class DesignError(Exception):
    exit_code = 1


class ConfigError(DesignError):
    """Invalid run configuration: unknown key, wrong type, bad units or bounds."""
    exit_code = 2


class GeometryError(ConfigError):
    """Cross-section or region layout that the solvers cannot accept."""


class DomainError(GeometryError, ValueError):
    """Argument outside the domain of a special function."""


class DegenerateGeometryError(GeometryError):
    """A modulus collapsed to 0 or 1, so a closed form has no finite value."""


class SolverError(DesignError):
    exit_code = 3


class ConvergenceError(SolverError):
    """Linear solve did not reach the residual tolerance."""


class UnderResolvedError(SolverError):
    """Grid does not resolve the films finely enough for the London solve."""


class FitError(DesignError):
    """Fit or optimizer could not produce a result."""
    exit_code = 4
