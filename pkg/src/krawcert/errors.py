"""Exception types shared across the package."""


class KrawcertError(Exception):
    """Base class for every error raised by this package."""


class IntervalError(KrawcertError, ValueError):
    """Invalid interval construction (reversed, NaN, or infinite bounds)."""


class IntervalDivisionError(KrawcertError, ZeroDivisionError):
    """Division where the denominator interval contains zero."""


class PrecisionMismatchError(KrawcertError, ValueError):
    """Operands carry different working precisions."""


class ParseError(KrawcertError, ValueError):
    """System file rejected; carries 1-based line and column positions."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class EvaluationError(KrawcertError, ArithmeticError):
    """Point or interval evaluation failed (division by zero, overflow)."""


class SingularMatrixError(KrawcertError, ArithmeticError):
    """A point matrix was numerically singular."""


class SolutionsFormatError(KrawcertError, ValueError):
    """Candidate solutions file rejected."""
