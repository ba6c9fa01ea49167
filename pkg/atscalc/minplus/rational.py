"""Exact rational helpers shared by every numeric module.

All times, sizes, rates and curve values are ``fractions.Fraction``. The only
non-rational value is the ``INF`` sentinel used for +∞ (bounded-delay tails,
unbounded pseudo-inverses, unbounded deviations).
"""
import math
from fractions import Fraction
from numbers import Rational
from typing import Union

Q = Fraction
INF = math.inf

Number = Union[Fraction, float]


class RationalParseError(ValueError):
    """Raised when a value cannot be read as an exact rational."""
    pass


def q(value) -> Fraction:
    """
    Coerce a value to an exact rational.

    Accepts ints, Fractions, strings such as ``"17/20"`` or ``"0.85"`` and
    ``{"n": .., "d": ..}`` mappings. Floats are refused: they would make
    exact tie decisions depend on binary rounding.
    """
    if isinstance(value, bool):
        raise RationalParseError(f"Refusing boolean as rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise RationalParseError(f"Not a rational: {value!r}") from e
    if isinstance(value, dict):
        return from_json(value)
    if isinstance(value, float):
        raise RationalParseError(f"Float {value!r} is not exact; pass a string such as '17/20'")
    raise RationalParseError(f"Unsupported rational type {type(value).__name__}")


def is_inf(value) -> bool:
    return isinstance(value, float) and value == INF


def to_json(value):
    """Serialize a rational as {"n","d"}; the INF sentinel becomes "inf"."""
    if is_inf(value):
        return "inf"
    value = q(value)
    return {"n": value.numerator, "d": value.denominator}


def from_json(doc) -> Number:
    if doc == "inf":
        return INF
    try:
        n, d = doc["n"], doc["d"]
    except (KeyError, TypeError) as e:
        raise RationalParseError(f"Expected {{'n','d'}} mapping, got {doc!r}") from e
    if not isinstance(n, int) or not isinstance(d, int) or d <= 0:
        raise RationalParseError(f"Bad rational document {doc!r}")
    return Fraction(n, d)


def to_text(value) -> str:
    """Compact exact text form: ``"17/20"``, ``"3"`` or ``"inf"``."""
    if is_inf(value):
        return "inf"
    return str(q(value))


def decimal_text(value, places: int = 6) -> str:
    """Display-only decimal rendering; never parsed back."""
    if is_inf(value):
        return "inf"
    value = q(value)
    scaled = round(value * 10 ** places)
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    whole, frac = divmod(scaled, 10 ** places)
    return f"{sign}{whole}.{frac:0{places}d}"


def positive_part(value):
    return value if value > 0 else Fraction(0)


def ceil_q(value: Fraction) -> int:
    return -((-value.numerator) // value.denominator)


def floor_q(value: Fraction) -> int:
    return value.numerator // value.denominator
