"""Exception taxonomy shared by all gmlsq modules."""


class GmlsqError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GmlsqError, ValueError):
    """Operands have inconsistent shapes."""


class SingularMatrix(GmlsqError):
    """A linear system was judged numerically singular.

    Carries the :class:`~gmlsq.linalg.SolveReport` of the failed solve in
    ``report`` so callers can log the condition estimate.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MissingClass(GmlsqError, ValueError):
    """A binary-classification input does not contain both labels."""


class IoError(GmlsqError):
    """A file could not be read or written."""


class ParseError(GmlsqError, ValueError):
    """A CSV cell could not be parsed; carries 1-based row/column indices."""

    def __init__(self, row, col, message):
        super().__init__(f"row {row}, column {col}: {message}")
        self.row = row
        self.col = col


class LabelCardinalityError(GmlsqError, ValueError):
    """The label column does not resolve to exactly two classes."""


class InsufficientClassSamples(GmlsqError, ValueError):
    """A split or subsample cannot retain both classes at the requested size."""
