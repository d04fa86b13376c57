"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class FiniteGapError(Exception):
    exit_code = 1


class ValidationError(FiniteGapError, ValueError):
    """Bad input: malformed sets, masses on the support, bad configs."""

    exit_code = 2


class InsufficientDepthError(ValidationError):
    pass


class PlacementError(ValidationError):
    pass


class BoundaryValueError(ValidationError):
    pass


class SingularityError(ValidationError):
    pass


class UnsupportedError(ValidationError):
    pass


class NumericalError(FiniteGapError, ArithmeticError):
    exit_code = 3


class DegenerateGeometryError(NumericalError):
    pass


class BracketingError(NumericalError):
    pass


class RankExhaustedError(NumericalError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
