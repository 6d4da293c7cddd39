"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when arguments violate a documented precondition."""


class NumericalDomainError(ArithmeticError):
    """Raised when a computation leaves its numerical domain (e.g. a variance <= 0)."""
