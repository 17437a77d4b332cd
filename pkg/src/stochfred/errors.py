"""Exception hierarchy shared by every module of the package."""


class StochFredError(Exception):
    """Base class for all errors raised by stochfred."""


class InvalidIntervalError(StochFredError, ValueError):
    pass


class GridMismatchError(StochFredError, ValueError):
    pass


class InsufficientBasisError(StochFredError, ValueError):
    pass


class DimensionMismatchError(StochFredError, ValueError):
    pass


class RepresentationMismatchError(StochFredError, TypeError):
    pass


class ParameterOutOfRangeError(StochFredError, ValueError):
    pass


class AlphaOutOfRangeError(StochFredError, ValueError):
    pass


class NoConvergenceError(StochFredError, RuntimeError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class NoSolutionError(StochFredError, ArithmeticError):
    pass


class SingularSystemError(StochFredError, ArithmeticError):
    pass


class DenominatorSingularError(SingularSystemError):
    pass


class ConditionViolatedError(StochFredError):
    """Raised when a hypothesis check fails and the caller did not force the solve."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class DegenerateMapError(StochFredError, ValueError):
    pass


class ConfigParseError(StochFredError, ValueError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class UnknownFunctionError(ConfigParseError):
    pass


class InvalidDomainError(ConfigParseError):
    pass


class UnknownExampleError(StochFredError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown example"
