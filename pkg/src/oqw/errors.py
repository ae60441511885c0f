"""Exception types raised by the walk engines and the analytic path."""


class OQWError(Exception):
    """Base class for all package errors."""


class DimensionError(OQWError, ValueError):
    """Operands have incompatible coin dimensions."""


class CommutationError(OQWError):
    """Transition operators do not commute.

    The measured max-entry norm of the commutator is kept on ``norm``.
    """

    def __init__(self, message: str, norm: float):
        super().__init__(message)
        self.norm = norm


class NonNormalError(OQWError):
    """An operator is not normal, so it has no orthonormal eigenbasis."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class DecompositionError(OQWError):
    """Joint eigendecomposition failed to reproduce its inputs."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class StateError(OQWError, ValueError):
    """A density block or walk state violates its invariants."""


class TransitionError(OQWError, ValueError):
    """A transition set violates the per-source normalization condition."""
