"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ListrankError(Exception):
    exit_code = 1


class UsageError(ListrankError, ValueError):
    """Bad arguments: out-of-range indices, invalid dimensions or configs."""

    exit_code = 1


class DataError(ListrankError):
    """Unreadable, malformed or degenerate input data."""

    exit_code = 2


class NumericError(ListrankError, ArithmeticError):
    """A trainer produced a non-finite factor."""

    exit_code = 3

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


PARTIAL_FAILURE_EXIT = 4
