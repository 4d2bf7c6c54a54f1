"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the interval on which the operation is defined."""


class ConfigurationError(ValueError):
    """Invalid numerical settings or inadmissible problem data."""


class UsageError(ValueError):
    """Inputs of inconsistent shape or type."""


class CertificationError(RuntimeError):
    """The sampled growth inequalities admit no valid constant."""


class SolverError(RuntimeError):
    """Nonlinear solve did not converge; carries the last iterate."""

    def __init__(self, message, iterate=None, residual=None, details=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
        self.details = details or {}


class DiagnosticError(RuntimeError):
    """A computed field violates a structural property it must have."""


class GeometryError(ValueError):
    """Degenerate curve or tube parametrization."""
