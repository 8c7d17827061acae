"""Exact money arithmetic.

Every value, price, payment and utility in this package is a
``fractions.Fraction``.  Floats are rejected at the parsing boundary: the
lattice orderings and welfare inequalities checked downstream are exact
comparisons, and a single binary-rounded input would produce spurious
violations.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

Money = Fraction

ZERO = Fraction(0)


def parse_money(value) -> Fraction:
    """Parse an int, a decimal string, or a ``"p/q"`` string exactly.

    >>> parse_money("0.125")
    Fraction(1, 8)
    >>> parse_money("-2/3")
    Fraction(-2, 3)
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a money amount")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}: pass a decimal string instead")
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not an exact rational: {value!r}") from exc
    raise TypeError(f"cannot parse money from {type(value).__name__}")


def format_money(q: Fraction) -> str:
    """Render exactly: a decimal string when the expansion terminates
    (denominator of the form 2^a 5^b), otherwise ``"p/q"``.
    """
    num, den = q.numerator, q.denominator
    if den == 1:
        return str(num)
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    k = max(twos, fives)
    scaled = abs(num) * 10**k // den
    digits = str(scaled).rjust(k + 1, "0")
    sign = "-" if num < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def rational_gcd(a: Fraction, b: Fraction) -> Fraction:
    """Greatest rational g such that a and b are both integer multiples of g."""
    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    num = gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(num, a.denominator * b.denominator)


def granularity(values, floor: Fraction = Fraction(1, 8)) -> Fraction:
    """gcd-style step of a value collection, floored from below.

    Used to pick a default bid-grid step: fine enough to express every value
    in the instance, but never finer than ``floor``.
    """
    g = ZERO
    for v in values:
        g = rational_gcd(g, v)
    if g == 0:
        return floor
    return max(g, floor)
