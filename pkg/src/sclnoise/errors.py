"""Exception types shared across the package."""


class SclnoiseError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SclnoiseError, ValueError):
    """A parameter violates an operation precondition."""


class StateOutOfRangeError(SclnoiseError, ValueError):
    """A state value exceeds the declared [-R, R] window."""


class NotAKineticFunctionError(SclnoiseError, ValueError):
    """A candidate field failed the kinetic-function checks.

    Carries the name of the first failing check in ``failing_flag``.
    """

    def __init__(self, failing_flag: str, message: str = ""):
        self.failing_flag = failing_flag
        super().__init__(message or f"not a kinetic function: {failing_flag} check failed")


class ResolutionInsufficientError(SclnoiseError, ValueError):
    """Mollification scales fell below the grid resolution."""


class DomainTooSmallError(SclnoiseError, RuntimeError):
    """The solution support reached the padded boundary."""


class StepSizeUnderflowError(SclnoiseError, RuntimeError):
    """Time step shrank below the representable floor."""


class DefectUndefinedError(SclnoiseError, ValueError):
    """Defect measure requested for an inviscid trajectory."""


class InvalidTestFunctionError(SclnoiseError, ValueError):
    """Test function touches the parabolic boundary."""


class SchemeMonotonicityError(SclnoiseError, RuntimeError):
    """Internal bug signal: a monotone scheme produced negative values."""
