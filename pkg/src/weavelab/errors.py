"""Exception hierarchy shared by all modules.

The CLI maps these to exit codes: parameter errors -> 2, domain errors -> 3,
numeric and construction errors -> 4.
"""


class WeaveError(Exception):
    """Base class for errors raised by weavelab."""


class ParameterError(WeaveError, ValueError):
    """An argument is outside its documented range or malformed."""


class RefusalError(ParameterError):
    """A size guard refused to run an exponential-time routine."""


class DomainError(WeaveError, ValueError):
    """The input is well formed but the quantity is undefined for it."""


class NumericError(WeaveError, ArithmeticError):
    """Floating point computation broke down (singular matrix, stalled ascent)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConstructionError(WeaveError, RuntimeError):
    """An internally built object failed its own consistency checks."""
