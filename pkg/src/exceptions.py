"""
Exception hierarchy for copuladep

Input problems map to exit code 2 and numerical failures to exit code 3.
"""

from typing import Optional

from .config import EXIT_INPUT_ERROR, EXIT_NUMERICAL_ERROR


class CopulaDepError(Exception):
    """Base exception for all copuladep errors"""

    exit_code: int = 1

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class InputError(CopulaDepError):
    """Invalid input data or parameters"""

    exit_code = EXIT_INPUT_ERROR


class RejectedInputError(InputError):
    """Input values violate a precondition (e.g. non-positive prices)"""
    pass


class InsufficientDataError(InputError):
    """Too few observations for the requested operation"""
    pass


class ParameterError(InputError):
    """Invalid parameter value"""
    pass


class DomainError(InputError):
    """Argument outside the domain of a mathematical function"""
    pass


class DegenerateSeriesError(InputError):
    """Series with zero variance where a nonzero variance is required"""

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class DegenerateWindowError(InputError):
    """Locally constant window in local normalization"""

    def __init__(self, message: str, t: int):
        super().__init__(message)
        self.t = t


class ParseError(InputError):
    """Malformed input file"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class NumericalError(CopulaDepError):
    """Numerical procedure failed"""

    exit_code = EXIT_NUMERICAL_ERROR


class QuadratureAccuracyError(NumericalError):
    """Quadrature did not reach the requested tolerance"""

    def __init__(self, message: str, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class QuantileRangeError(NumericalError):
    """Probability outside the range achieved by a CDF"""
    pass


class FitFailureError(NumericalError):
    """Least squares fit could not produce a finite loss"""
    pass
