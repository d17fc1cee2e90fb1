"""Kernel learning by moving random-feature particles."""

from .exceptions import BudgetError, NumericalError, ValidationError

__version__ = "0.1.0"

__all__ = ["BudgetError", "NumericalError", "ValidationError", "__version__"]
