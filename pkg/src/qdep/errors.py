"""Exception types raised across the package."""


class QdepError(ValueError):
    """Base class for all data and parameter errors."""


class LengthMismatch(QdepError):
    pass


class NonFiniteValue(QdepError):
    pass


class TiesPresent(QdepError):
    pass


class SampleTooSmall(QdepError):
    pass


class DomainError(QdepError):
    pass


class DegenerateRegion(QdepError):
    pass


class SmoothingRadiusTooLarge(QdepError):
    pass


class InvalidPoolSize(QdepError):
    pass


class EmptyPool(QdepError):
    pass


class MismatchedPool(QdepError):
    pass


class InvalidParameter(QdepError):
    pass


class UnknownModel(QdepError):
    pass


class ParseError(QdepError):
    """Malformed input file; ``line`` is the 1-based offending line."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
