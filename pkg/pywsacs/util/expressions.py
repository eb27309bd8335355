"""
Exact π-rational numbers, as used for the sampling offset ε and normalized
phases.

Values are held as ``coefficient * π**power`` with a rational coefficient and
``power`` in {0, 1}.  This keeps floor(n·ε) certifiable for the irrational
offsets that define asynchronous sampling.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

import pydantic
import pydantic.dataclasses as dataclasses

from ..exceptions import ConfigurationError, PrecisionError

# Rational bracket of π: PI_LOWER < π < PI_UPPER.
PI_LOWER = Fraction("3.14159265358979323846264338327950288419")
PI_UPPER = PI_LOWER + Fraction(1, 10**38)

_number = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_pi_expression = re.compile(
    rf"^\s*(?P<num>{_number})?\s*\*?\s*pi\s*(?:/\s*(?P<den>{_number}))?\s*$",
    re.IGNORECASE,
)
_ratio_expression = re.compile(rf"^\s*(?P<num>{_number})\s*(?:/\s*(?P<den>{_number}))?\s*$")


@dataclasses.dataclass(frozen=True, config=pydantic.ConfigDict(arbitrary_types_allowed=True))
class PiRational:
    """
    A number ``coefficient * π**power``.

    Attributes
    ----------
    coefficient : Fraction
    power : int
        0 for plain rationals, 1 for rational multiples of π.
    """

    coefficient: Fraction
    power: int = 0

    def __post_init__(self):
        if self.power not in (0, 1):
            raise ConfigurationError(f"Unsupported power of pi: {self.power}")

    @property
    def is_rational(self) -> bool:
        return self.power == 0 or self.coefficient == 0

    def __float__(self) -> float:
        if self.power == 0:
            return float(self.coefficient)
        return float(self.coefficient) * math.pi

    def bracket(self) -> tuple:
        """Rational lower and upper bounds (equal for rational values)."""
        if self.is_rational:
            return self.coefficient, self.coefficient
        low = self.coefficient * PI_LOWER
        high = self.coefficient * PI_UPPER
        return (low, high) if low <= high else (high, low)

    def floor_times(self, n: int) -> int:
        """
        Certified floor(n * value).

        Raises
        ------
        PrecisionError
            If the floor differs between the two ends of the π bracket.
        """
        low, high = self.bracket()
        floor_low = math.floor(n * low)
        floor_high = math.floor(n * high)
        if floor_low != floor_high:
            raise PrecisionError(
                f"floor({n} * {self}) is not resolved by the pi bracket "
                f"({floor_low} != {floor_high})"
            )
        return floor_low

    def __str__(self) -> str:
        if self.power == 0:
            return str(self.coefficient)
        num, den = self.coefficient.numerator, self.coefficient.denominator
        head = "pi" if num == 1 else f"{num}*pi"
        return head if den == 1 else f"{head}/{den}"


def _fraction(text: str) -> Fraction:
    return Fraction(text.strip())


def parse_pi_rational(value: Union[str, float, int, Fraction, PiRational]) -> PiRational:
    """
    Parse a number or π-expression.

    Accepted forms: ``0.3``, ``"0.3"``, ``"3/10"``, ``"pi"``, ``"pi/7"``,
    ``"2*pi/7"``, ``"2pi/7"``.  Floats are converted through their shortest
    repr, so ``0.3`` becomes exactly 3/10.

    Raises
    ------
    ConfigurationError
        For anything else.
    """
    if isinstance(value, PiRational):
        return value
    if isinstance(value, bool):
        raise ConfigurationError(f"Not a number: {value!r}")
    if isinstance(value, Fraction):
        return PiRational(coefficient=value)
    if isinstance(value, int):
        return PiRational(coefficient=Fraction(value))
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigurationError(f"Not a finite number: {value!r}")
        return PiRational(coefficient=Fraction(repr(value)))
    if not isinstance(value, str):
        raise ConfigurationError(f"Cannot interpret {value!r} as a number")

    match = _pi_expression.match(value)
    if match:
        num = _fraction(match["num"]) if match["num"] else Fraction(1)
        den = _fraction(match["den"]) if match["den"] else Fraction(1)
        if den == 0:
            raise ConfigurationError(f"Division by zero in {value!r}")
        return PiRational(coefficient=num / den, power=1)

    match = _ratio_expression.match(value)
    if match:
        num = _fraction(match["num"])
        den = _fraction(match["den"]) if match["den"] else Fraction(1)
        if den == 0:
            raise ConfigurationError(f"Division by zero in {value!r}")
        return PiRational(coefficient=num / den)

    raise ConfigurationError(
        f"Cannot interpret {value!r}: expected a number or an expression like 'pi/7'"
    )


def parse_float_expression(value: Union[str, float, int]) -> float:
    """Parse a number or π-expression to a float."""
    return float(parse_pi_rational(value))
