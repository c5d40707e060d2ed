from __future__ import annotations

from typing import Optional

class ShrinkLabException(Exception):
    """Base class for every error raised by ShrinkLab."""

    default_message = "An error has been encountered inside ShrinkLab"

    def __init__(self, message: Optional[str] = None, field: Optional[str] = None):
        self.field = field
        super().__init__(message or self.default_message)

    @property
    def diagnostic(self) -> str:
        """Returns a one-line description of the error, naming the offending field if known."""
        text = " ".join(str(self).split())
        if self.field is None:
            return text
        return f"{self.field}: {text}"

class UsageError(ShrinkLabException):
    default_message = "Invalid command usage"

class ConfigurationError(UsageError):
    default_message = "Invalid configuration value"

class InvalidParameters(ShrinkLabException):
    default_message = "Parameters are outside of the allowed range"

class SizeCapExceeded(ShrinkLabException):
    """Raised when an instance, program or search exceeds a configured cap."""
    def __init__(self, size: int, cap: int, field: str = "size"):
        self.size = size
        self.cap = cap
        super().__init__(f"size {size} exceeds the configured cap of {cap}", field)

class GridMismatch(ShrinkLabException):
    default_message = "Mechanism grids do not match the distribution grids"

class SchemaError(ShrinkLabException):
    default_message = "File does not follow the expected schema"

class NonMonotoneAllocation(ShrinkLabException):
    default_message = "Allocation is not monotone in the bidder's own value"

class NotHighPriced(ShrinkLabException):
    default_message = "Mechanism allocates to bidder 1 below the offer price"

class TransformDidNotTerminate(ShrinkLabException):
    default_message = "Shift transform did not terminate within the support size"

class SurplusViolation(ShrinkLabException):
    default_message = "Shift fix would lose more revenue than it gains"

class LemmaViolation(ShrinkLabException):
    default_message = "A closed-form identity does not hold"

class SimplexIterationLimit(ShrinkLabException):
    default_message = "Simplex exceeded its iteration limit"
