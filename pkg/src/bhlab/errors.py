"""Exception types shared across the lab."""


class BHLabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BHLabError, ValueError):
    """A state value lies outside the admissible range [-B, B]."""


class PreconditionError(BHLabError, ValueError):
    """An operation was called with inputs violating its contract."""


class ConfigurationError(BHLabError, ValueError):
    """A scenario or operator is incompletely or inconsistently configured."""


class SingularityError(BHLabError, ValueError):
    """A quantity was requested at a point where it is not defined."""


class ResolutionError(BHLabError, ValueError):
    """A requested window is narrower than the grid can resolve."""


class QuadratureError(BHLabError, ArithmeticError):
    """Adaptive quadrature hit its interval cap before meeting tolerance.

    Attributes
    ----------
    value : float
        Best available estimate of the integral.
    achieved : float
        Estimated absolute error of ``value``.
    """

    def __init__(self, message, value, achieved):
        super().__init__(message)
        self.value = value
        self.achieved = achieved


class GapViolationError(BHLabError, RuntimeError):
    """The reference jump closed below the configured floor."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class BlowUpError(BHLabError, RuntimeError):
    """The numerical state left the admissible range during a run."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class EscapeError(BHLabError, RuntimeError):
    """A characteristic path left the computational domain."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time
