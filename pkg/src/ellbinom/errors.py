"""Exception types shared across the package."""


class DomainError(ValueError):
    """A numeric argument lies outside the function's domain."""


class ConfigurationError(ValueError):
    """A series or table was configured inconsistently."""


class DivergenceError(DomainError):
    """A generator moment integral does not converge."""
