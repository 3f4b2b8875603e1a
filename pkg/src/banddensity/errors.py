"""
Exception hierarchy for the band-density toolkit.

Every error raised on purpose by the library derives from BandDensityError so the
CLI can map it to exit code 2 in one place.
"""
from typing import Optional


class BandDensityError(Exception):
    """Base class for all library errors."""


class ConfigError(BandDensityError):
    """Invalid configuration value or run configuration."""


class FamilySyntaxError(BandDensityError):
    """Malformed coefficient expression.

    Attributes:
        position: Zero-based character offset of the offending token
        text: The expression that failed to parse
    """

    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at offset {position}")
        self.position = position
        self.text = text


class FamilyEvaluationError(BandDensityError):
    """An expression could not be evaluated at an index (division by zero, irrational value...)."""

    def __init__(self, message: str, index: Optional[int] = None):
        if index is not None:
            message = f"{message} (n={index})"
        super().__init__(message)
        self.index = index


class CoefficientOverflowError(FamilyEvaluationError):
    """A float-mode coefficient evaluated to inf or nan."""


class ConstraintViolationError(BandDensityError):
    """The pentadiagonal identity c_n + d_n = a_n b_n fails at some index."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class UnknownFamilyError(BandDensityError):
    """Requested built-in family does not exist."""


class ZeroCoefficientError(BandDensityError):
    """A coefficient that must be nonzero vanished."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class SupportWindowError(BandDensityError):
    """Operator support reaches beyond the window a computation can see."""


class DimensionMismatchError(BandDensityError):
    """Vector sequences of different dimension were combined."""


class TriangleInfeasibleError(BandDensityError):
    """The right-triangle data violates (AX)^-2 + (BY)^-2 = Z^2."""


class InfeasibleAngleError(BandDensityError):
    """No angle realizes the requested cosine (|cos| > 1)."""


class PlanError(BandDensityError):
    """A length plan could not be built (infinite mu, non-positive radicand)."""


class WitnessError(BandDensityError):
    """A witness could not be constructed, normalized or assembled."""


class NegativeTermError(BandDensityError):
    """A summability diagnostic received a negative term."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index
