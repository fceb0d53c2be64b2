"""Exception types shared across the package."""


class SPSError(Exception):
    """Base class for all package errors."""


class EmptyInteriorError(SPSError):
    """No lattice point falls strictly inside the domain."""


class GridMismatchError(SPSError):
    """Two fields living on different grids were combined."""


class NonFiniteFieldError(SPSError):
    """A field operation produced NaN or Inf values."""


class NoConvergenceError(SPSError):
    """An inner linear solve hit its iteration cap."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateRayError(SPSError):
    """The ray through a field never crosses the Nehari manifold."""


class NotConvergedError(SPSError):
    """All minimization restarts failed to converge."""


class ZeroFieldError(SPSError):
    """An operation requiring a nonzero field received zero."""


class RadiusTooLargeError(SPSError):
    """The ball B_r does not fit inside the domain."""


class OutsideInnerSetError(SPSError):
    """A transplant center lies outside the inner set of the domain."""


class TailTooLargeError(SPSError):
    """The analytic tail bound of a radial quadrature is not negligible."""


class ConfigError(SPSError):
    """A run configuration failed validation; message carries the field path."""
