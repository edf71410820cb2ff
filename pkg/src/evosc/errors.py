"""Exception types shared across the package.

The CLI maps these onto exit statuses: usage/validation problems exit with
2, data/runtime problems with 3.
"""


class EvoscError(Exception):
    """Base class for all evosc errors."""


class ValidationError(EvoscError):
    """An invariant on a domain object or its inputs does not hold."""


class ParameterError(EvoscError):
    """An operation was called with parameters outside its contract."""


class ContractError(EvoscError):
    """Two API objects that must agree (lengths, bands, ...) do not."""


class ParseError(EvoscError):
    """A file cannot be parsed. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class OrderingError(ParseError):
    """Event timestamps regress beyond the reorder tolerance."""


class RangeError(EvoscError):
    """A timestamp or window falls outside the valid span."""


class TrainingError(EvoscError):
    """Training produced a non-finite loss."""
