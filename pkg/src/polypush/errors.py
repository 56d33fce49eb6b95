"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: input/parse problems -> 2,
validation failures -> 3, numerical/domain failures -> 4.
"""


class PolypushError(Exception):
    """Base class."""


class InvalidInputError(PolypushError, ValueError):
    """Malformed arguments (empty point list, zero direction, bad id ...)."""


class ValidationError(PolypushError):
    """A complex or set model breaks a structural invariant."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotInPolytopeError(PolypushError):
    """Point lies outside |P|; carries the nearest simplex for diagnostics."""

    def __init__(self, message, nearest=None, distance=None):
        super().__init__(message)
        self.nearest = nearest
        self.distance = distance


class NumericError(PolypushError):
    """Base for failures that are numerical rather than structural."""


class PreconditionError(NumericError):
    """Geometric precondition violated (apex not interior, wrong simplex ...)."""


class DomainError(NumericError):
    """Map evaluated outside its domain."""


class ApexTooCloseError(NumericError):
    """Candidate apex is within the admissibility gap of a sample."""


class SelectionError(NumericError):
    """Apex search exhausted its draw budget."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
