"""Exception hierarchy shared by all modules."""


class LrquenchError(Exception):
    """Base class for package errors."""


class DomainError(LrquenchError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedModelError(LrquenchError):
    """The requested operation has no meaning for this model kind."""


class NumericError(LrquenchError, ArithmeticError):
    """A numerical routine failed or produced an inconsistent result."""


class IntegrationError(NumericError):
    """Time integration drifted beyond tolerance or could not proceed."""


class ResourceError(LrquenchError):
    """The problem size exceeds a configured resource cap."""


class AmbiguousMinimumError(NumericError):
    """A scan found more than one local minimum."""

    def __init__(self, message, minima=()):
        super().__init__(message)
        self.minima = list(minima)


class FitError(NumericError):
    """A fit was singular, ill-posed or inconclusive."""


class ConfigError(LrquenchError, ValueError):
    """An experiment configuration is malformed."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
