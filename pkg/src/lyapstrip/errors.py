"""Exception hierarchy shared by every module."""


class LyapStripError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(LyapStripError, ValueError):
    pass


class PreconditionError(LyapStripError, ValueError):
    pass


class NearSingularError(LyapStripError, ArithmeticError):
    """A linear system is singular to working precision.

    ``condition`` holds the condition-number estimate that triggered the error.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class UnsupportedDisorderError(LyapStripError, ValueError):
    pass


class InconclusiveError(LyapStripError):
    pass


class ConfigurationError(LyapStripError):
    pass


class AggregationError(LyapStripError):
    pass
