"""Exception types shared across the package."""


class TraceProdError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(TraceProdError):
    """Operands have incompatible shapes or sizes."""


class MembershipError(TraceProdError):
    """A matrix does not belong to the required matrix space."""


class SingularMatrixError(TraceProdError):
    """A matrix or transfer that must be invertible is singular or too ill-conditioned."""


class RankDeficientError(TraceProdError):
    """Sample inputs fail to span the required space."""


class InconsistentSamplesError(TraceProdError):
    """No linear map reproduces the given input/output samples."""

    def __init__(self, message, worst_index=None, residual=None):
        super().__init__(message)
        self.worst_index = worst_index
        self.residual = residual


class PreservationError(TraceProdError):
    """Maps fail the trace-of-products identity required as a precondition."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CanonicalStructureError(TraceProdError):
    """Input does not carry the canonical structure its preconditions guarantee."""


class NotApplicableError(TraceProdError):
    """The requested operation does not apply to these parameters."""


class PositivityError(TraceProdError):
    """A matrix required to be positive definite is not."""


class InvalidParameterError(TraceProdError):
    """Parameters violate a documented invariant."""
