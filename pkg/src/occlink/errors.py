"""Exception types raised across the toolkit."""


class OccError(Exception):
    """Base class for every error raised by occlink."""


class InvalidArgument(OccError, ValueError):
    pass


class InvalidPayload(OccError, ValueError):
    """A byte that violates the zero-run constraint (or is not a byte)."""


class CommandError(OccError, ValueError):
    """A controller command line that cannot be parsed.

    ``token`` carries the offending piece of the line.
    """

    def __init__(self, message: str, token: str = ""):
        super().__init__(message)
        self.token = token


class NotTransmitting(OccError, RuntimeError):
    pass


class CannotEstimate(OccError, ValueError):
    pass


class Undersampled(OccError, ValueError):
    pass


class NoMessage(OccError, LookupError):
    pass


class NotFound(OccError, LookupError):
    pass


class LoadError(OccError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
