"""Exact factorial-ratio arithmetic.

Every moment of the Gamma-type operators and the normalization constant of
their kernel is a ratio of factorials.  These are kept as exact rationals
(:class:`fractions.Fraction`) so that moment identities can be checked
without rounding; :func:`log_factorial` is the float path used inside
quadrature densities.
"""
from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from typing import Iterable

RationalCoefficient = Fraction

_EXACT_LOG_LIMIT = 20


def falling_factorial(x: int, m: int) -> Fraction:
    """Return ``[x]_m = x (x-1) ... (x-m+1)``, with ``[x]_0 = 1``.

    ``x`` may be negative; the falling factorial is a polynomial in ``x``.
    """
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    prod = 1
    for i in range(m):
        prod *= x - i
    return Fraction(prod)


def log_factorial(n: int) -> float:
    """Return ``ln(n!)``."""
    if n < 0:
        raise ValueError(f"factorial of negative number {n}")
    if n <= _EXACT_LOG_LIMIT:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1.0)


def _range_product(lo: int, hi: int) -> int:
    # product of lo+1 .. hi
    prod = 1
    for v in range(lo + 1, hi + 1):
        prod *= v
    return prod


def factorial_ratio(numer_factorials: Iterable[int],
                    denom_factorials: Iterable[int]) -> Fraction:
    """Exact ``prod(a_i!) / prod(b_j!)``.

    Identical arguments cancel outright; the remaining factorials are paired
    largest-with-largest so each pair contributes only a short range
    product instead of two full factorials.
    """
    num = Counter(numer_factorials)
    den = Counter(denom_factorials)
    for v in list(num) + list(den):
        if v < 0:
            raise ValueError(f"factorial of negative number {v}")
    common = num & den
    num -= common
    den -= common

    a = sorted(num.elements(), reverse=True)
    b = sorted(den.elements(), reverse=True)
    top, bottom = 1, 1
    for i in range(max(len(a), len(b))):
        ai = a[i] if i < len(a) else 0
        bi = b[i] if i < len(b) else 0
        if ai >= bi:
            top *= _range_product(bi, ai)
        else:
            bottom *= _range_product(ai, bi)
    return Fraction(top, bottom)
