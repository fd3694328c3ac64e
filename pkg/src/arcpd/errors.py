"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ArcpdError(Exception):
    code = "error"
    exit_code = 1


class ValidationError(ArcpdError, ValueError):
    code = "validation"
    exit_code = 2


class CensoringError(ArcpdError):
    code = "censoring"
    exit_code = 3


class ConvergenceError(ArcpdError):
    code = "non_convergence"
    exit_code = 4


class NumericRangeError(ArcpdError, ArithmeticError):
    code = "numeric_range"
    exit_code = 5

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InfeasibleConditioningError(ArcpdError):
    code = "infeasible_conditioning"
    exit_code = 6


class DegenerateDirectionError(ArcpdError, ValueError):
    code = "degenerate_direction"
    exit_code = 7


class UnsupportedConfigurationError(ArcpdError):
    code = "unsupported_configuration"
    exit_code = 8


class UndefinedDetectabilityError(ArcpdError, ValueError):
    code = "undefined_detectability"
    exit_code = 9


class DegenerateDirectionWarning(UserWarning):
    """Raised as a warning when a kernel query sits on the c = 0 line."""
