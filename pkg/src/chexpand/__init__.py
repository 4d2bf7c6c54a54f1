"""Second-order asymptotics of Dirichlet phase-field energies with subquadratic wells."""

from chexpand.errors import (CertificationError, ConfigurationError, DiagnosticError, DomainError,
                             GeometryError, SolverError, UsageError)
from chexpand.potential import DoubleWell, GrowthCertificate, certify_growth, geodesic_distance
from chexpand.profile import TransitionProfile, build_profile, hitting_time, tail_integral
from chexpand.setup1d import BoundaryData1D, Grid, Weight

__all__ = [
    "BoundaryData1D", "CertificationError", "ConfigurationError", "DiagnosticError", "DomainError",
    "DoubleWell", "GeometryError", "Grid", "GrowthCertificate", "SolverError", "TransitionProfile",
    "UsageError", "Weight", "build_profile", "certify_growth", "geodesic_distance", "hitting_time",
    "tail_integral",
]
__version__ = "0.1.0"
