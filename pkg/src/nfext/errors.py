"""Exception hierarchy shared by every nfext module."""


class NfextError(Exception):
    """Base class for all library errors."""


class ConfigError(NfextError, ValueError):
    pass


class DomainError(NfextError, ValueError):
    """A surface coordinate lies outside the shape-function domain."""

    def __init__(self, message, coordinate=None, value=None):
        super().__init__(message)
        self.coordinate = coordinate
        self.value = value


class GeometryError(NfextError, ValueError):
    pass


class PreconditionError(NfextError, ValueError):
    pass


class ConvergenceError(NfextError, RuntimeError):
    """The stationary-point search did not reach the residual tolerance."""

    def __init__(self, message, best_residual=float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class DegenerateHessianError(NfextError, ArithmeticError):
    pass


class BudgetError(NfextError, RuntimeError):
    pass


class ModelError(NfextError, ValueError):
    pass


class MetricsError(NfextError, ValueError):
    pass


class BoundaryError(NfextError, RuntimeError):
    pass


class DegenerateWeightError(NfextError, ArithmeticError):
    pass
