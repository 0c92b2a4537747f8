class SpinControlError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SpinControlError, ValueError):
    """An input violates a precondition (shape, hermiticity, unitarity, range)."""


class DecompositionError(SpinControlError):
    """A factorization could not be verified to the requested tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
