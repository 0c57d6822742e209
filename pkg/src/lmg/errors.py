"""Exception types shared across the package."""


class LMGError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(LMGError, ValueError):
    pass


class DomainError(LMGError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ContractError(LMGError, ValueError):
    """A precondition on a composite object (e.g. an unrepaired kappa) is violated."""


class ResourceError(LMGError):
    """Requested problem size exceeds the configured cap."""


class NumericError(LMGError, ArithmeticError):
    pass


class IntegrationError(NumericError):
    """Raised when an ODE integrator cannot advance.

    ``last_time`` holds the last time reached successfully.
    """

    def __init__(self, message: str, last_time: float):
        super().__init__(f"{message} (last good time t={last_time:.6g})")
        self.last_time = last_time


class FitQualityError(NumericError):
    def __init__(self, message: str, r_squared: float):
        super().__init__(f"{message} (R^2={r_squared:.6f})")
        self.r_squared = r_squared


class ConfigError(LMGError):
    pass


class MarkovRegimeWarning(UserWarning):
    """Bath correlation time is not short compared to the dissipative time scale."""


class ContractWarning(UserWarning):
    """Input accepted but outside the documented contract (e.g. a non-Hermitian observable)."""
