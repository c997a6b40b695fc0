"""Exception types shared across the package."""


class ApproxIncError(Exception):
    """Base class for package errors."""


class ParameterError(ApproxIncError, ValueError):
    """Raised when inputs violate an algorithm's preconditions."""


class OutOfDomainError(ApproxIncError, ValueError):
    """Raised when a point lies outside a grid domain beyond tolerance."""


class OracleBudgetError(ApproxIncError, RuntimeError):
    """Raised when a brute-force oracle call would exceed its work budget."""


class InstanceFormatError(ApproxIncError, ValueError):
    """Raised for malformed instance files. Carries the offending line number."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
