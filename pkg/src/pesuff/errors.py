"""Exception hierarchy shared by all pesuff modules."""


class PesuffError(Exception):
    """Base class for all library-specific errors."""


class InvalidArgumentError(PesuffError, ValueError):
    """An argument violates a documented precondition."""


class InvalidDataError(PesuffError, ValueError):
    """Input data contains values the operation cannot accept (NaN, nonpositive prices, ...)."""


class InsufficientDataError(PesuffError, ValueError):
    """The series is too short for the requested configuration."""


class DegenerateDataError(PesuffError, ValueError):
    """The data admits no informative statistic (constant series, all patterns excluded, ...)."""


class EstimationFailedError(PesuffError, RuntimeError):
    """Model estimation did not produce usable parameters."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(PesuffError, ValueError):
    """A CLI or experiment configuration is unusable."""
