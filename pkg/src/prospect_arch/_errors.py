"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class RangeError(ValueError):
    """A lookup falls outside a cached table's range."""


class DegenerateDataError(ValueError):
    """Input data carries no usable spread (e.g. a constant series)."""


class SingularFitError(ValueError):
    """A least-squares design matrix is rank deficient."""


class CsvFormatError(ValueError):
    """A CSV input could not be parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    row : int, optional
        1-based row number in the source file.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
