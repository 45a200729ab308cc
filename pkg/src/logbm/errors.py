"""Exception types shared by all modules."""


class LogBMError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(LogBMError, ValueError):
    pass


class PreconditionViolation(LogBMError):
    """An input failed a geometric precondition (symmetry, down-closedness, ...)."""


class Unsupported(LogBMError, NotImplementedError):
    pass


class ResourceLimit(LogBMError):
    """An enumeration exceeded its configured cap."""
