"""Exception types shared across the package."""


class ICOTError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ICOTError, ValueError):
    """Input data violates a documented precondition."""


class ParseError(ICOTError, ValueError):
    """A text document (CSV, tree file) is malformed.

    Carries 1-based row/column positions when they are known.
    """

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InstanceTooLargeError(ICOTError):
    """Exhaustive enumeration refused because the instance exceeds the guard bound."""
