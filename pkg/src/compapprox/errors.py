"""Exception types shared across the package."""


class CapabilityError(Exception):
    """An operation was asked of a variant that does not support it.

    The message names the missing query so callers can route around it.
    """


class CertificationError(RuntimeError):
    """A multiplier or residual certificate failed its membership check."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class NonconvergenceError(RuntimeError):
    """An iterative solve hit its cap; carries the best iterate found."""

    def __init__(self, message, best=None, residual=None, partial_trace=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.partial_trace = partial_trace


class EvaluationError(ValueError):
    """An approximating function returned +inf where a real value is required."""


class ConfigError(ValueError):
    """Invalid experiment configuration; collects every validation error."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
