"""Exception types shared across the toolkit."""


class TasError(Exception):
    """Base class for toolkit errors."""


class InvalidResolutionError(TasError, ValueError):
    pass


class CapabilityError(TasError, ValueError):
    """Requested (family, cell kind, degree) combination is not supported."""


class DimensionError(TasError, ValueError):
    pass


class NotSPDError(TasError, ArithmeticError):
    """Conjugate gradients broke down: p^T A p <= 0."""


class DomainError(TasError, ValueError):
    """A value lies outside the domain of a digit metric.

    The offending raw value is kept on ``value`` so callers can still plot it.
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class GroupingError(TasError, ValueError):
    pass


class RecordParseError(TasError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class SchemaVersionError(TasError, ValueError):
    pass


class RecordValidationError(TasError, ValueError):
    """One or more rows failed record invariants.

    ``diagnostics`` is a list of ``(row, message)`` pairs.
    """

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = [f"row {row}: {msg}" for row, msg in self.diagnostics]
        super().__init__("invalid records:\n" + "\n".join(lines))
