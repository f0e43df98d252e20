"""Exception hierarchy.

Input problems derive from ``ValueError`` and map to CLI exit code 2; numeric
failures derive from ``ArithmeticError`` and map to exit code 3.
"""


class SplitKnockoffError(Exception):
    """Base class for all split-knockoffs errors."""


class InvalidInputError(SplitKnockoffError, ValueError):
    """The caller supplied something the procedure cannot accept."""


class NumericalError(SplitKnockoffError, ArithmeticError):
    """A numeric routine could not produce a valid result."""


class InvalidParameterError(InvalidInputError):
    pass


class InvalidEdgeError(InvalidInputError):
    pass


class InvalidSplitError(InvalidInputError):
    pass


class InvalidIndexError(InvalidInputError):
    pass


class DimensionMismatchError(InvalidInputError):
    pass


class InvalidFoldsError(InvalidInputError):
    pass


class InsufficientDimensionError(InvalidInputError):
    pass


class InsufficientSamplesError(InvalidInputError):
    pass


class ScreeningTooLooseError(InvalidInputError):
    pass


class MalformedInputError(InvalidInputError):
    """A CSV input could not be parsed.

    Row and column are 1-based positions in the file (header row included).
    """

    def __init__(self, message: str, path: str = "", row: int = 0, column: int = 0):
        self.path = path
        self.row = row
        self.column = column
        location = f"{path}:" if path else ""
        if row:
            location += f" row {row}"
        if column:
            location += f", column {column}"
        super().__init__(f"{location.strip()}: {message}" if location else message)


class NotPositiveDefiniteError(NumericalError):
    pass


class NotPositiveSemidefiniteError(NumericalError):
    pass


class InfeasibleSError(NumericalError):
    pass


class NonConvergedPathError(NumericalError):
    pass


class InternalInvariantViolationError(NumericalError):
    pass
