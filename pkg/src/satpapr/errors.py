"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class UndefinedPaprError(InvalidInputError):
    """Raised when PAPR is requested for an all-zero signal."""
