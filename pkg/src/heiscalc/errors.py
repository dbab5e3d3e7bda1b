"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``InputError`` -> 2,
``CapabilityError`` -> 3.
"""


class HeiscalcError(Exception):
    """Base class for all package errors."""


class InputError(HeiscalcError, ValueError):
    """Malformed or inconsistent user input."""


class ExprSyntaxError(InputError):
    """Syntax error in a coefficient expression."""

    def __init__(self, message, line=1, column=1, source=""):
        self.line = line
        self.column = column
        self.source = source
        self.message = message
        super().__init__(f"{message} (line {line}, column {column})")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class VariableRangeError(ExprSyntaxError):
    pass


class DomainError(HeiscalcError, ArithmeticError):
    """A partial operation (division, log, sqrt) evaluated outside its domain."""


class SingularFrameError(InputError):
    """The coefficient matrix B(x) of a frame is not invertible."""


class ConditionFailure(HeiscalcError):
    """A hypoellipticity condition failed where it is required.

    ``report`` carries the ConditionReport with the witness.
    """

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class CapabilityError(HeiscalcError):
    """The requested evaluation lies outside what the implementation covers."""


class ConvergenceError(HeiscalcError):
    """An iterative numerical method hit its iteration or node budget."""
