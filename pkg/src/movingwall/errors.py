"""Exception types shared by all modules."""


class MovingWallError(Exception):
    """Base class for errors raised by this package."""


class DomainError(MovingWallError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class InterpolationError(DomainError):
    """A tabulated curve was queried outside its sample range."""


class ResolutionError(MovingWallError, ValueError):
    """A quadrature or grid resolution is too coarse for the request."""


class SolverError(MovingWallError, RuntimeError):
    """A linear solve inside a time step failed."""


class ValidationError(MovingWallError, ValueError):
    """Input data violates a structural requirement (e.g. Hermitian symmetry)."""


class NonObservableError(MovingWallError, ArithmeticError):
    """A Gramian is numerically singular.

    Attributes
    ----------
    kernel : ndarray
        Unit eigenvector of the smallest eigenvalue.
    min_eigenvalue : float
    """

    def __init__(self, message, kernel, min_eigenvalue):
        super().__init__(message)
        self.kernel = kernel
        self.min_eigenvalue = min_eigenvalue


class ConfigError(MovingWallError, ValueError):
    """Run configuration is malformed or references missing files."""
