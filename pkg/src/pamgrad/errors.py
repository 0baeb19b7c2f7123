"""Exception types shared across the package."""


class PamgradError(Exception):
    """Base class for all package errors."""


class GuardExceeded(PamgradError):
    """The state space is larger than the enumeration guard allows."""


class UnsupportedSpec(PamgradError):
    """The requested operation does not support this state-space variant or size."""


class DimensionMismatch(PamgradError):
    """Vector lengths disagree with the state-space dimension."""


class InfeasibleState(PamgradError):
    """A bit vector is not a member of the constrained state space."""


class InvalidStep(PamgradError):
    """A finite-difference step size is outside its valid range."""


class DegenerateGradient(PamgradError):
    """Every downstream gradient in a batch has zero norm."""


class EmptyBatch(PamgradError):
    """A controller update was requested with no per-example statistics."""
