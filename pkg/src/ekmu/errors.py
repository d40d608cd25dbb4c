"""Exception types shared across the package."""


class EkmuError(Exception):
    """Base class for all library errors."""


class DomainError(EkmuError, ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(EkmuError, ArithmeticError):
    """An iterative scheme ran out of budget.

    ``estimate`` carries the best value reached before giving up, when one
    exists.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DataError(EkmuError, ValueError):
    """Malformed or invalid measurement data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DiscrepancyError(EkmuError, ArithmeticError):
    """Two routes to the same quantity disagree beyond tolerance."""
