"""
Scalar arithmetic shared by every module.

Two arithmetic modes exist: ``rational`` (fractions.Fraction, exact) and
``float`` (IEEE doubles). High-precision planar constructions run in mpmath and
hand back exact rationals of the binary values they computed.
"""
import math
from fractions import Fraction
from typing import Union

import mpmath
from mpmath import libmp

from banddensity.errors import ConfigError, FamilyEvaluationError

Scalar = Union[Fraction, float]

RATIONAL = "rational"
FLOAT = "float"
MODES = (FLOAT, RATIONAL)


def check_mode(mode: str) -> str:
    """
    Validate an arithmetic mode name.

    Raises:
        ConfigError: If mode is not 'float' or 'rational'
    """
    if mode not in MODES:
        raise ConfigError(f"Unsupported arithmetic mode: {mode}. Supported modes: {', '.join(MODES)}")
    return mode


def coerce(value, mode: str) -> Scalar:
    """Convert an int, Fraction or float into the scalar type of ``mode``."""
    if mode == RATIONAL:
        if isinstance(value, float):
            if not math.isfinite(value):
                raise FamilyEvaluationError(f"non-finite value {value!r} has no rational form")
            return Fraction(value)
        return Fraction(value)
    return float(value)


def zero(mode: str) -> Scalar:
    return Fraction(0) if mode == RATIONAL else 0.0


def one(mode: str) -> Scalar:
    return Fraction(1) if mode == RATIONAL else 1.0


def sign(value) -> int:
    if value > 0:
        return 1
    if value < 0:
        return -1
    return 0


def magnitude_bits(value) -> int:
    """Approximate |log2 |value||; zero counts as 0."""
    if value == 0:
        return 0
    if isinstance(value, Fraction):
        return abs(abs(value.numerator).bit_length() - value.denominator.bit_length())
    if isinstance(value, int):
        return abs(value).bit_length()
    mantissa, exponent = math.frexp(float(value))
    return abs(exponent)


def format_scalar(value) -> str:
    """
    Print a scalar reproducibly.

    Fractions print exactly as "p/q" ("p" for integers); floats print as the
    shortest round-trip decimal.

    Example:
        >>> format_scalar(Fraction(3, 8))
        '3/8'
        >>> format_scalar(0.1)
        '0.1'
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def parse_scalar(text: str) -> Scalar:
    """
    Inverse of format_scalar: "p/q" and integer literals give Fractions, decimals give floats.

    Raises:
        ValueError: If the text is not a scalar literal
    """
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return Fraction(int(text))
    except ValueError:
        return float(text)


def to_float(value) -> float:
    return float(value)


def to_mpf(value):
    """Convert a Fraction, int or float to an mpf at the current mpmath precision."""
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def mpf_to_fraction(value) -> Fraction:
    """
    Exact rational value of a finite mpf.

    Raises:
        FamilyEvaluationError: If the value is inf or nan
    """
    if not isinstance(value, mpmath.mpf):
        value = mpmath.mpf(value)
    if not mpmath.isfinite(value):
        raise FamilyEvaluationError(f"non-finite intermediate value {value}")
    numerator, denominator = libmp.to_rational(value._mpf_)
    return Fraction(numerator, denominator)


def divide(numerator, denominator):
    """Quotient that stays exact when both operands are ints or Fractions."""
    if isinstance(numerator, float) or isinstance(denominator, float):
        return numerator / denominator
    return Fraction(numerator) / Fraction(denominator)
