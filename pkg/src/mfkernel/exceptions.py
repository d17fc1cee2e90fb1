"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input: bad shapes, out-of-range parameters, malformed files."""


class BudgetError(RuntimeError):
    """A size cap or iteration budget was exceeded.

    ``partial`` carries the last iterate when one is available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NumericalError(RuntimeError):
    """Non-finite values, step-size violations, or diverging runs."""
