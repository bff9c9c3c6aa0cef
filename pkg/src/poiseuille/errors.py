"""
Exceptions raised by the toolkit.

The command line maps them onto exit codes (see `poiseuille.runner`).
"""

from typing import Any, Optional, Tuple


class PoiseuilleError(Exception):
    """Root of every error raised on purpose by this package."""


class ConfigurationError(PoiseuilleError, ValueError):
    """A parameter, a constant or a config document is invalid."""


class DomainError(ConfigurationError):
    """A physical parameter lies outside its admissible interval."""


class ShapeError(PoiseuilleError, ValueError):
    """Array lengths do not match the grid they are used with."""


class NumericalError(PoiseuilleError, ArithmeticError):
    """
    A linear solve failed or produced non-finite values.

    Args:
        message (str): what failed
        condition (Optional[float]): estimated condition number of the matrix
          involved, when one was computed
    """

    def __init__(
        self: "NumericalError", message: str, condition: Optional[float] = None
    ) -> None:
        if condition is not None:
            message = f"{message} (condition number ~ {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class BlowUpError(NumericalError):
    """
    The nonlinear evolution produced NaN or overflowed.

    Args:
        time (float): simulation time of the last finite state
    """

    def __init__(self: "BlowUpError", time: float) -> None:
        super().__init__(f"Blow-up detected after t = {time:.6g}")
        self.time = time

    def __reduce__(self: "BlowUpError") -> Tuple[Any, ...]:
        return (type(self), (self.time,))


class UndefinedRatioError(PoiseuilleError, ZeroDivisionError):
    """A ratio was requested for a state that makes its denominator zero."""


class FitError(PoiseuilleError, ValueError):
    """Not enough usable samples for a decay-rate fit."""


class VerificationError(PoiseuilleError):
    """
    An identity residual exceeded its tolerance.

    Args:
        worst (float): the largest residual observed
        tolerance (float): the tolerance it was checked against
    """

    def __init__(
        self: "VerificationError", worst: float, tolerance: float
    ) -> None:
        super().__init__(
            f"Identity residual {worst:.3e} exceeds tolerance {tolerance:.1e}"
        )
        self.worst = worst
        self.tolerance = tolerance

    def __reduce__(self: "VerificationError") -> Tuple[Any, ...]:
        return (type(self), (self.worst, self.tolerance))


class OutputError(PoiseuilleError, OSError):
    """A result file or directory could not be written."""
