"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An input violates a documented precondition."""


class SingularParametrizationError(ArithmeticError):
    """The roughness parametrization is singular (zero spread)."""


class UnidentifiableError(ValueError):
    """The requested functional cannot be estimated from the channel."""
