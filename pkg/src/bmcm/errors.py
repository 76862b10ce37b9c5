"""Exception hierarchy shared by every bmcm module."""


class BMCMError(Exception):
    """Base class for all errors raised by bmcm."""


class TemplateSyntaxError(BMCMError):
    """Raised when a model template cannot be parsed.

    ``position`` is the 0-based character offset where parsing failed.
    """

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} (at position {position})")


class EvaluationError(BMCMError):
    """Missing variable or mismatched operator assignment."""


class CapacityError(BMCMError):
    """Operator space too large to enumerate."""


class UnsupportedArityError(BMCMError):
    pass


class DataFormatError(BMCMError):
    """Malformed CSV input. ``row`` and ``column`` locate the bad cell when known."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class UnknownColumnError(BMCMError):
    pass


class InvalidSizeError(BMCMError):
    pass


class UndefinedTestError(BMCMError):
    """A statistical test was requested on data where it is undefined."""


class DegenerateTableError(UndefinedTestError):
    """A 2x2 table has a zero row or column margin."""


class UndecidableSlotError(BMCMError):
    pass


class GateInapplicableError(BMCMError):
    """The null-data table lacks an all-1 or all-0 group."""


class GateNotPassedError(BMCMError):
    """Operator analysis requested after the null-data gate failed."""
