"""Exception and warning types shared across the package."""


class DimensionMismatch(ValueError):
    """An input's shape is inconsistent with the dictionary or model."""


class SingularGram(RuntimeError):
    """The Gram matrix is singular (or numerically so) and no ridge term saves it."""


class InvalidSparsity(ValueError):
    """Requested sparsity level is outside [1, N]."""


class ZeroVector(ValueError):
    """An operation that needs a nonzero vector received (numerically) zero."""


class DegenerateSum(ArithmeticError):
    """The sum of sparse and dense codes is too small to normalize."""


class ZeroSample(ValueError):
    """A zero column cannot be normalized to unit length."""


class ParseError(ValueError):
    """A dataset file is malformed.

    Carries 1-based ``row`` and ``column`` locations when they are known.
    """

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.row = row
        self.column = column


class EmptyDataset(ValueError):
    """A dataset file contains no samples."""


class InfeasibleGeometry(ValueError):
    """A geometric construction cannot be realized in the requested dimension."""


class NoConvergence(UserWarning):
    """An iterative solver hit its iteration cap before reaching tolerance."""
