from __future__ import annotations

import sys

from typing import TYPE_CHECKING

from shrinklab.cogs.models import exceptions

# Errors caused by the invocation: bad flags, files, schemas and caps
usage_errors = (
    exceptions.UsageError,
    exceptions.SchemaError,
    exceptions.SizeCapExceeded,
    exceptions.InvalidParameters,
    exceptions.GridMismatch,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError
)

# Errors raised when a mechanism or identity fails a check
validation_errors = (
    exceptions.NonMonotoneAllocation,
    exceptions.NotHighPriced,
    exceptions.TransformDidNotTerminate,
    exceptions.SurplusViolation,
    exceptions.LemmaViolation,
    exceptions.SimplexIterationLimit
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2

if TYPE_CHECKING:
    from shrinklab.client import ShrinkLab

def diagnostic(error: BaseException) -> str:
    """Returns a one-line description of an error."""
    if isinstance(error, exceptions.ShrinkLabException):
        return error.diagnostic
    if isinstance(error, OSError) and error.filename is not None:
        return f"path: {error.strerror} ({error.filename})"
    return " ".join(str(error).split()) or type(error).__name__


class ErrorHandler:
    """This class implements the handling of errors raised while running a verb."""

    def __init__(self, client: ShrinkLab):
        self.client = client

    def notify(self, message: str):
        print(f"error: {message}", file=sys.stderr)

    def handle(self, error: BaseException) -> int:
        """Reports an error and returns the exit status it maps to."""
        if isinstance(error, usage_errors):
            self.notify(diagnostic(error))
            return EXIT_USAGE

        if isinstance(error, validation_errors):
            self.notify(diagnostic(error))
            return EXIT_VALIDATION

        self.client.logger.exception("Unexpected error while running the command")
        self.notify(diagnostic(error))
        return EXIT_VALIDATION
