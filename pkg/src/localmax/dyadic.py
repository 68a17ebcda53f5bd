"""Exact dyadic-rational helpers.

Geometry is carried in :class:`fractions.Fraction`; every coordinate that
comes out of the grid is a dyadic rational ``m / 2**s``, which also means
it is exactly representable as a float64 as long as it has fewer than 53
significant bits.  The helpers here convert between the three views
(Fraction, float, ``{mantissa, scale}`` pair).
"""
from fractions import Fraction
from numbers import Rational

__all__ = [
    "to_fraction",
    "parse_ratio",
    "is_dyadic",
    "encode",
    "decode",
    "exact_float",
]


def to_fraction(x):
    """Exact Fraction for ints, Fractions, floats and ``{mantissa, scale}`` dicts."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, dict):
        return decode(x)
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


def parse_ratio(x):
    """Fraction from a user-facing parameter such as ``beta=0.2``.

    Floats are read through their shortest decimal representation, so
    ``0.2`` becomes ``1/5`` rather than the nearest dyadic.  Coordinates
    should go through :func:`to_fraction` instead.
    """
    if isinstance(x, float):
        return Fraction(repr(x))
    return to_fraction(x)


def is_dyadic(x):
    x = to_fraction(x)
    d = x.denominator
    return d & (d - 1) == 0


def encode(x):
    """``{"mantissa": m, "scale": s}`` with ``x == m * 2**-s``; ``s`` may be negative."""
    x = to_fraction(x)
    if not is_dyadic(x):
        raise ValueError(f"{x} is not a dyadic rational")
    m, d = x.numerator, x.denominator
    s = d.bit_length() - 1
    if m == 0:
        return {"mantissa": 0, "scale": 0}
    # strip trailing zero bits so the encoding is canonical
    while s > 0 and m % 2 == 0:
        m //= 2
        s -= 1
    while s <= 0 and m % 2 == 0:
        m //= 2
        s -= 1
    return {"mantissa": m, "scale": s}


def decode(obj):
    m, s = int(obj["mantissa"]), int(obj["scale"])
    if s >= 0:
        return Fraction(m, 2**s)
    return Fraction(m * 2 ** (-s))


def exact_float(x):
    """float(x), refusing values that would round."""
    x = to_fraction(x)
    f = float(x)
    if Fraction(f) != x:
        raise ValueError(f"{x} is not exactly representable as float64")
    return f
