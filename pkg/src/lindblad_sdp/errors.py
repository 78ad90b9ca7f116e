"""Exception types shared across the package."""


class LindbladSdpError(Exception):
    """Base class for all package errors."""


class ValidationError(LindbladSdpError):
    """Input violates a documented precondition or invariant."""


class SizeLimitError(ValidationError):
    """Requested Hilbert-space dimension exceeds the configured maximum."""


class DegenerateSpectrumError(LindbladSdpError):
    """Operation requires a non-degenerate spectrum but the input has
    (near-)degenerate eigenvalues; proceeding would divide by tiny gaps."""


class PoleError(LindbladSdpError):
    """Evaluation exactly at a pole of the Bose occupation factor."""


class QuadratureError(LindbladSdpError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class NonUniqueSteadyStateError(LindbladSdpError):
    """The population rate matrix has a numerically multi-dimensional
    nullspace, so no unique steady state exists."""


class SolverError(LindbladSdpError):
    """Conic solver backend failed or returned an uncertifiable result."""


class CertificationError(LindbladSdpError):
    """Post-solve verification (oracle re-evaluation, GKSL or
    conservation-law audit) failed."""


class SchemaError(LindbladSdpError):
    """Config, CSV, or dump file does not match the expected schema."""
