"""Exception types raised across the package."""


class BCWError(Exception):
    """Base class for all package errors."""


class ShapeError(BCWError, ValueError):
    """Fields or trajectories that live on incompatible domains or grids."""


class DomainError(BCWError, ValueError):
    """An argument outside the mathematical domain of an operation."""


class InsufficientDataError(BCWError, ValueError):
    pass


class Diverged(BCWError):
    """Picard iteration did not reach the requested tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class Degenerate(BCWError):
    """The factor 1 + 2*sigma*psi_t became non-positive somewhere on the grid."""

    def __init__(self, message, margin):
        super().__init__(message)
        self.margin = margin


class StabilityError(BCWError):
    """Explicit reference integration blew up; use more substeps."""


class ConfigError(BCWError, ValueError):
    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
