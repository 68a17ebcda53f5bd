from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from localmax.dyadic import decode, encode, exact_float, is_dyadic, parse_ratio, to_fraction


def test_parse_ratio_reads_decimal_text():
    assert parse_ratio(0.2) == Fraction(1, 5)
    assert parse_ratio("1/2") == Fraction(1, 2)


def test_to_fraction_is_exact_for_floats():
    assert to_fraction(0.1) == Fraction(0.1)
    assert to_fraction({"mantissa": 3, "scale": 2}) == Fraction(3, 4)


def test_encode_is_canonical():
    assert encode(Fraction(6, 8)) == {"mantissa": 3, "scale": 2}
    assert encode(8) == {"mantissa": 1, "scale": -3}
    assert encode(0) == {"mantissa": 0, "scale": 0}


def test_non_dyadic_rejected():
    assert not is_dyadic(Fraction(1, 3))
    with pytest.raises(ValueError):
        encode(Fraction(1, 3))
    with pytest.raises(ValueError):
        exact_float(Fraction(1, 3))


@given(st.integers(-10**9, 10**9), st.integers(-40, 60))
def test_encode_roundtrip(m, s):
    x = Fraction(m) / Fraction(2) ** s
    assert decode(encode(x)) == x
