import math
from fractions import Fraction

import pytest

from ..exceptions import ConfigurationError, PrecisionError
from ..util.expressions import (
    PI_LOWER,
    PI_UPPER,
    PiRational,
    parse_float_expression,
    parse_pi_rational,
)


@pytest.mark.parametrize(
    "text, coefficient, power",
    [
        pytest.param("pi/7", Fraction(1, 7), 1, id="pi-over-7"),
        pytest.param("2*pi/7", Fraction(2, 7), 1, id="multiple"),
        pytest.param("2pi/7", Fraction(2, 7), 1, id="implicit-multiple"),
        pytest.param(" PI ", Fraction(1), 1, id="case-and-spaces"),
        pytest.param("0.5*pi", Fraction(1, 2), 1, id="decimal-coefficient"),
        pytest.param("3/10", Fraction(3, 10), 0, id="ratio"),
        pytest.param("0.3", Fraction(3, 10), 0, id="decimal-text"),
        pytest.param("1e-3", Fraction(1, 1000), 0, id="exponent"),
        pytest.param(0.3, Fraction(3, 10), 0, id="float"),
        pytest.param(2, Fraction(2), 0, id="int"),
        pytest.param(Fraction(1, 3), Fraction(1, 3), 0, id="fraction"),
    ],
)
def test_parse(text, coefficient, power):
    value = parse_pi_rational(text)
    assert value.coefficient == coefficient
    assert value.power == power


@pytest.mark.parametrize(
    "value",
    [
        pytest.param("pie", id="word"),
        pytest.param("pi/0", id="pi-division-by-zero"),
        pytest.param("1/0", id="division-by-zero"),
        pytest.param("-pi", id="sign"),
        pytest.param(True, id="bool"),
        pytest.param(math.inf, id="inf"),
        pytest.param(None, id="none"),
    ],
)
def test_parse_rejects(value):
    with pytest.raises(ConfigurationError):
        parse_pi_rational(value)


def test_passthrough():
    value = PiRational(coefficient=Fraction(1, 7), power=1)
    assert parse_pi_rational(value) is value


def test_unsupported_power():
    with pytest.raises(ValueError):
        PiRational(coefficient=Fraction(1), power=2)


def test_float_and_str():
    assert float(parse_pi_rational("pi/7")) == math.pi / 7
    assert parse_float_expression("pi/5") == math.pi / 5
    assert parse_float_expression("1/4") == 0.25
    assert str(parse_pi_rational("pi/7")) == "pi/7"
    assert str(parse_pi_rational("2*pi/7")) == "2*pi/7"
    assert str(parse_pi_rational("pi")) == "pi"
    assert str(parse_pi_rational(0.3)) == "3/10"


def test_bracket():
    low, high = parse_pi_rational("pi/7").bracket()
    assert low < high
    assert low < Fraction(math.pi / 7) * (1 + Fraction(1, 10**15))
    assert high - low == (PI_UPPER - PI_LOWER) / 7
    assert parse_pi_rational("3/10").bracket() == (Fraction(3, 10), Fraction(3, 10))
    assert PiRational(coefficient=Fraction(0), power=1).is_rational


@pytest.mark.parametrize(
    "text, n, expected",
    [
        pytest.param("pi/7", 1, 0, id="n1"),
        pytest.param("pi/7", 7, 3, id="n7"),
        pytest.param("pi/7", 100, 44, id="n100"),
        pytest.param("pi/7", 10**12, 448798950512, id="n1e12"),
        pytest.param("1/2", 4, 2, id="rational-exact"),
        pytest.param("1/3", 3, 1, id="rational-third"),
    ],
)
def test_floor_times(text, n, expected):
    assert parse_pi_rational(text).floor_times(n) == expected


def test_floor_times_unresolved():
    # The bracket straddles 1.
    value = PiRational(coefficient=2 / (PI_LOWER + PI_UPPER), power=1)
    with pytest.raises(PrecisionError):
        value.floor_times(1)
