"""Exception types shared across the package."""


class MachlabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MachlabError, ValueError):
    """Invalid grid, config file or parameter combination."""


class PreconditionError(MachlabError, ValueError):
    """An operation was called on data violating its precondition."""


class RangeError(MachlabError, ValueError):
    """A requested value lies outside the computed or admissible range."""


class AccuracyError(MachlabError, RuntimeError):
    """A quadrature or iteration failed to reach its target accuracy."""


class BlowUpError(MachlabError, RuntimeError):
    """Raised by time steppers when the solution leaves the trusted regime."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time
