import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gammaops.coefficients import factorial_ratio, falling_factorial, log_factorial


@pytest.mark.parametrize("x, m, expected", [(5, 2, 20), (7, 0, 1), (3, 4, 0)])
def test_falling_factorial_examples(x, m, expected):
    assert falling_factorial(x, m) == expected


def test_falling_factorial_negative_argument_is_polynomial():
    # [-2]_3 = (-2)(-3)(-4)
    assert falling_factorial(-2, 3) == -24


def test_falling_factorial_rejects_negative_order():
    with pytest.raises(ValueError):
        falling_factorial(4, -1)


def test_falling_factorial_matches_factorial_quotient():
    for n in range(26):
        for m in range(n + 1):
            assert falling_factorial(n, m) == math.factorial(n) // math.factorial(n - m)


@pytest.mark.parametrize("n", [0, 1, 5, 20, 21, 50, 170, 400])
def test_log_factorial(n):
    exact = math.log(math.factorial(n)) if n <= 170 else sum(math.log(i) for i in range(2, n + 1))
    assert log_factorial(n) == pytest.approx(exact, rel=1e-14, abs=1e-15)


def test_log_factorial_examples():
    assert log_factorial(0) == 0.0
    assert log_factorial(5) == pytest.approx(4.787491742782046, rel=1e-15)
    assert log_factorial(20) == pytest.approx(math.log(2432902008176640000), rel=1e-15)
    with pytest.raises(ValueError):
        log_factorial(-1)


def test_factorial_ratio_examples():
    assert factorial_ratio([8, 10], [10, 8]) == 1
    assert factorial_ratio([9, 9], [10, 8]) == Fraction(9, 10)
    r = factorial_ratio([21], [10, 8])
    assert r == Fraction(math.factorial(21), math.factorial(10) * math.factorial(8))
    via_logs = math.exp(log_factorial(21) - log_factorial(10) - log_factorial(8))
    assert float(r) == pytest.approx(via_logs, rel=1e-12)


def test_factorial_ratio_lowest_terms_and_errors():
    r = factorial_ratio([3], [5])
    assert (r.numerator, r.denominator) == (1, 20)
    with pytest.raises(ValueError):
        factorial_ratio([-1], [2])


small = st.lists(st.integers(0, 60), min_size=0, max_size=4)


@given(small, small)
def test_factorial_ratio_matches_direct_quotient(a, b):
    direct = Fraction(math.prod(math.factorial(v) for v in a),
                      math.prod(math.factorial(v) for v in b))
    assert factorial_ratio(a, b) == direct


@given(small, small)
def test_factorial_ratio_matches_log_space(a, b):
    logs = sum(log_factorial(v) for v in a) - sum(log_factorial(v) for v in b)
    assert float(factorial_ratio(a, b)) == pytest.approx(math.exp(logs), rel=1e-10)
