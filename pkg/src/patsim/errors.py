"""Exception types shared across the toolkit."""


class PatsimError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(PatsimError):
    """Raised when inputs (files, rows, formats, stage preconditions) are invalid.

    The CLI maps this to exit code 2; everything else is an internal error.
    """


class CollinearityError(PatsimError):
    """Raised when a design matrix is rank deficient at lambda = 0."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(
            "design matrix is rank deficient; collinear columns: "
            + ", ".join(self.columns)
        )
