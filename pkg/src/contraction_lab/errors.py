"""Exception types raised by contraction_lab."""


class ContractionLabError(Exception):
    """Base class for all package errors."""


class NonFinite(ContractionLabError, ValueError):
    pass


class NotPositiveDefinite(ContractionLabError, ValueError):
    pass


class NotNegativeDefinite(ContractionLabError, ValueError):
    pass


class SingularBlock(ContractionLabError, ValueError):
    pass


class DimensionMismatch(ContractionLabError, ValueError):
    pass


class NotCommuting(ContractionLabError, ValueError):
    """K and M^-1 do not commute, so K M^-1 is not symmetric."""


class ConstraintViolation(ContractionLabError, ValueError):
    pass


class NonPositiveDistance(ContractionLabError, ValueError):
    """A distance sample inside a fit window is <= 0."""


class ParseError(ContractionLabError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ValidationError(ContractionLabError, ValueError):
    pass
