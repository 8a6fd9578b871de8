"""Exception hierarchy shared by all modules."""


class NonlinopError(Exception):
    """Base class for every error raised by this package."""


class CatalogError(NonlinopError, KeyError):
    """Unknown built-in kernel family or test function name."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ArgumentError(NonlinopError, ValueError):
    pass


class DomainError(NonlinopError, ValueError):
    """A kernel family or function is used on a domain it does not support."""


class IntegrationError(NonlinopError):
    """Quadrature did not reach the requested tolerance.

    ``result`` carries the partial estimate so callers can inspect it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonIntegrableError(IntegrationError):
    pass


class OperatorEvaluationError(NonlinopError):
    def __init__(self, message, m=None, result=None):
        super().__init__(message)
        self.m = m
        self.result = result


class ConfigError(NonlinopError):
    pass


class ReportError(NonlinopError):
    pass
