"""Exception types shared across the package."""


class DivflowError(Exception):
    """Base class for package errors."""


class DataError(DivflowError, ValueError):
    """Malformed or unusable input data (bad lines, empty results, ...)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InfeasibleError(DivflowError, ValueError):
    """An optimization instance admits no feasible solution."""

    def __init__(self, message, users=()):
        super().__init__(message)
        self.users = list(users)
