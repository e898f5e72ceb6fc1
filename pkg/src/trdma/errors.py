"""Exception types raised across the package."""


class TrdmaError(Exception):
    """Base class for all package errors."""


class ParameterError(TrdmaError, ValueError):
    """Invalid configuration or argument value."""


class DimensionError(TrdmaError, ValueError):
    """Array shapes that do not compose."""


class DegenerateChannelError(TrdmaError, ValueError):
    """A user's channel (or filter) has zero energy."""


class NumericalError(TrdmaError, ArithmeticError):
    """Non-finite values appeared during a computation."""


class ConditioningError(NumericalError):
    """A per-subcarrier system is singular or too badly conditioned to solve."""

    def __init__(self, message, subcarrier=None):
        super().__init__(message)
        self.subcarrier = subcarrier


class FileFormatError(TrdmaError, ValueError):
    """A channel file has a malformed header or inconsistent payload."""


class TruncatedFileError(FileFormatError):
    """The payload holds fewer values than the header promises."""
