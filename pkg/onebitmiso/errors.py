from __future__ import annotations

from typing import Optional


class OneBitMisoError(Exception):
    """Base class for every error raised by onebitmiso."""


class InvalidSymbolError(OneBitMisoError, ValueError):
    """A value is not a point of the expected constellation."""


class ConfigurationError(OneBitMisoError, ValueError):
    """Parameters that cannot be served, e.g. a LUT with too many users."""


class DegenerateInputError(OneBitMisoError, ValueError):
    """Input carries no usable information (all-zero samples, empty blocks)."""


class NumericalError(OneBitMisoError, ArithmeticError):
    def __init__(self, message: str, condition_number: Optional[float] = None):
        if condition_number is not None:
            message = f"{message} (condition number {condition_number:.3e})"
        super().__init__(message)
        self.condition_number = condition_number


class UsageError(OneBitMisoError):
    """Command-line misuse; maps to exit code 1."""


class OutputExistsError(OneBitMisoError, FileExistsError):
    """Refusing to overwrite an existing results file."""
