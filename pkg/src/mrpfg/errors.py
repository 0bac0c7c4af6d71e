"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised for malformed arguments (lengths, rates, bands, indices)."""


class EvaluationError(ArithmeticError):
    """Raised when a frequency response cannot be evaluated, e.g. a pole on the unit circle."""


class InstabilityError(RuntimeError):
    """Raised when a closed-loop simulation exceeds the divergence threshold."""
