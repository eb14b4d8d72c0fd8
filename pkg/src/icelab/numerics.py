"""Exact-arithmetic helpers.

Verdicts of the oracle suite must not hinge on rounding: weights are kept as
Fractions whenever the inputs are rational and the needed square roots are
rational; otherwise 50-digit mpmath floats with a tiny comparison slack.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Union

import mpmath

mpmath.mp.dps = 50

#: comparison slack for the high-precision float path
MP_SLACK = mpmath.mpf("1e-30")

Number = Union[int, Fraction, mpmath.mpf, float]


def to_exact(x) -> Number:
    """Fraction for ints/floats/Fractions (floats are binary-exact), mpf otherwise."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return mpmath.mpf(x)


def exact_sqrt(x: Fraction) -> Optional[Fraction]:
    """The rational square root of x, or None."""
    if x < 0:
        raise ValueError("negative argument")
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def sqrt_any(x) -> Number:
    """Rational square root when possible, else a 50-digit mpf."""
    if isinstance(x, Fraction):
        r = exact_sqrt(x)
        if r is not None:
            return r
        return mpmath.sqrt(mpmath.mpf(x.numerator) / x.denominator)
    return mpmath.sqrt(x)


def as_mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def is_exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in xs)


def numbers_close(x, y, rel=MP_SLACK) -> bool:
    """Equality for Fractions, relative closeness for the mpf path."""
    if is_exact(x, y):
        return x == y
    a, b = as_mpf(x), as_mpf(y)
    scale = max(abs(a), abs(b), mpmath.mpf(1))
    return abs(a - b) <= rel * scale


def ge_with_slack(x, y, rel=MP_SLACK) -> bool:
    """x >= y, with relative slack on the float path."""
    if is_exact(x, y):
        return x >= y
    a, b = as_mpf(x), as_mpf(y)
    scale = max(abs(a), abs(b), mpmath.mpf(1))
    return a >= b - rel * scale


def rel_deviation(x, y):
    """|x-y| / max(|x|,|y|,1) in the common arithmetic."""
    if is_exact(x, y):
        d = abs(x - y)
        s = max(abs(x), abs(y), Fraction(1))
        return d / s
    a, b = as_mpf(x), as_mpf(y)
    return abs(a - b) / max(abs(a), abs(b), mpmath.mpf(1))
