"""Exception types shared across the package."""


class LevyRMTError(Exception):
    pass


class ParameterDomainError(LevyRMTError, ValueError):
    """Parameters outside the domain of the law or ensemble."""


class StabilityMismatchError(ParameterDomainError):
    pass


class TailUndefinedError(LevyRMTError, ValueError):
    pass


class DegenerateTailError(ParameterDomainError):
    pass


class InsufficientDataError(LevyRMTError, ValueError):
    pass


class AccuracyError(LevyRMTError, ArithmeticError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class ConvergenceError(LevyRMTError, ArithmeticError):
    """Iterative solver failed to converge."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class BranchError(ConvergenceError):
    """Root tracking landed on a non-Herglotz branch."""


class ExtrapolationError(LevyRMTError, ValueError):
    pass


class EigensolverError(LevyRMTError, ArithmeticError):
    pass


class ConfigError(LevyRMTError, ValueError):
    pass
