"""Elliptical binomial series and the generator-free matrix beta law over division algebras."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DivergenceError, DomainError
from .special_fns import AlgebraDim

__all__ = ["__version__", "AlgebraDim", "DomainError", "ConfigurationError", "DivergenceError"]
