"""Exception types shared across the package."""


class TorusNSError(Exception):
    """Base class for all package errors."""


class DomainError(TorusNSError, ValueError):
    """A parameter is outside its admissible range (t < 0, p < 1, ...)."""


class DimensionError(TorusNSError):
    """Component count / grid dimensionality mismatch."""


class GridMismatchError(TorusNSError):
    """Two fields do not share the same grid."""


class CapacityError(TorusNSError):
    """Requested frequencies do not fit inside the dealiased band of the grid."""


class ContractViolationError(TorusNSError):
    """A documented precondition (e.g. divergence-free advecting velocity) fails."""


class ValidationError(TorusNSError):
    """Invalid experiment configuration."""


class BlowUpError(TorusNSError):
    """A solver produced non-finite coefficients.

    Carries the last finite state and the time at which it was recorded.
    """

    def __init__(self, message, last_field=None, t=None, stage=None):
        super().__init__(message)
        self.last_field = last_field
        self.t = t
        self.stage = stage
