"""Exception hierarchy shared by every module in the package."""


class HTEError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(HTEError, ValueError):
    pass


class DimensionError(HTEError, ValueError):
    pass


class PositivityError(HTEError, ValueError):
    """Propensity scores outside the open interval (0, 1)."""


class DataValidationError(HTEError, ValueError):
    pass


class EstimationError(HTEError, ValueError):
    """The data cannot support the requested estimator (e.g. a single arm)."""


class NumericError(HTEError, ArithmeticError):
    pass


class IllConditionedError(HTEError, ArithmeticError):
    """A normal-equation system is singular or numerically singular."""


class ConvergenceError(HTEError, RuntimeError):
    pass


class UndefinedRateError(HTEError, ValueError):
    """A classification rate whose denominator class is empty."""
