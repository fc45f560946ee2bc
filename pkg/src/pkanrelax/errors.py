"""Exception types raised by pkanrelax."""


class PkanRelaxError(Exception):
    """Base class for all library errors."""


class IdenticallyZero(PkanRelaxError, ValueError):
    """Raised when a root query is made on the zero polynomial."""


class RootFailure(PkanRelaxError, ArithmeticError):
    """Raised when polynomial root iteration fails to converge."""


class NotConvexOnInterval(PkanRelaxError, ValueError):
    pass


class BracketFailure(PkanRelaxError, ArithmeticError):
    """Raised when a slope bracket for bitangent bisection is invalid."""


class OutOfDomain(PkanRelaxError, ValueError):
    pass


class DimensionMismatch(PkanRelaxError, ValueError):
    pass


class NotMonotone(PkanRelaxError, ValueError):
    """Raised when a GAM link changes monotonicity on the relevant range.

    ``location`` holds the abscissa of the offending sign change of the
    derivative, when one is known.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ParseError(PkanRelaxError, ValueError):
    """Malformed model or coefficient input.

    ``where`` carries a field path (``layers[1][0][2]``) or a line number.
    """

    def __init__(self, message, where=None):
        if where is not None:
            message = f"{where}: {message}"
        super().__init__(message)
        self.where = where


class Infeasible(PkanRelaxError, ArithmeticError):
    """Raised by the LP routine when phase one ends with positive infeasibility."""
