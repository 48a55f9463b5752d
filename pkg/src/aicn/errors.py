"""Exception types shared across the package."""


class AICNError(Exception):
    """Base class for every error raised by this package."""


class NotPositiveDefinite(AICNError, ValueError):
    """A matrix that must be positive definite failed Cholesky factorization."""


class DimensionMismatch(AICNError, ValueError):
    pass


class NumericalError(AICNError, ArithmeticError):
    """A step produced NaN or Inf."""


class SubproblemNotConverged(AICNError, RuntimeError):
    pass


class ParseError(AICNError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(AICNError, ValueError):
    pass


class NoMonotonePoint(AICNError, RuntimeError):
    """Every grid point of a tuning sweep produced a non-monotone trace."""

    def __init__(self, message, verdicts=None):
        super().__init__(message)
        self.verdicts = verdicts or []
