"""Extended k-u fading: distribution, link metrics, Monte Carlo and fitting."""

from .errors import ConvergenceError, DataError, DiscrepancyError, DomainError, EkmuError
from .model import ExtKuParams, SnrContext

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DataError",
    "DiscrepancyError",
    "DomainError",
    "EkmuError",
    "ExtKuParams",
    "SnrContext",
]
