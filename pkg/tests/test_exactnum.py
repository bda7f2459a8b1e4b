from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cfflows import exactnum
from cfflows.exactnum import (
    ExactReal, IndependenceViolation, ONE, XI1, XI2, ZERO, compare, enclosure, exact_max, exact_min,
    parse, set_generators, sign, to_text,
)

small = st.fractions(min_value=-50, max_value=50, max_denominator=12)
reals = st.builds(ExactReal, small, small, small)


def test_sqrt2_between_rationals():
    assert compare(XI1, ExactReal(Fraction(141, 100))) == 1
    assert compare(XI1, ExactReal(Fraction(142, 100))) == -1


def test_near_cancellation_needs_intervals():
    # 665857/470832 is a convergent of sqrt(2): float cannot decide the sign
    x = ExactReal(Fraction(-665857, 470832), 1)
    assert sign(x) == -1
    assert sign(-x) == 1


def test_equality_is_structural():
    assert XI1 + XI2 - XI2 == XI1
    assert compare(XI1 * 2, XI1 + XI1) == 0
    assert hash(ExactReal(3)) == hash(3)


def test_text_forms():
    assert to_text(ExactReal(3, 2, Fraction(-1, 2))) == "3 + 2*xi1 - 1/2*xi2"
    assert to_text(ZERO) == "0"
    assert to_text(-XI1) == "-xi1"
    assert parse("24 + 4*xi1 + 2*xi2") == ExactReal(24, 4, 2)
    with pytest.raises(ValueError):
        parse("3 +")


def test_dependent_generators_are_reported():
    try:
        set_generators(2, 8)  # sqrt(8) = 2 sqrt(2)
        with pytest.raises(IndependenceViolation):
            sign(ExactReal(0, 2, -1))
    finally:
        set_generators(2, 3)


def test_max_min():
    xs = [XI1, XI2, ONE, ExactReal(Fraction(3, 2))]
    assert exact_max(xs) == XI2
    assert exact_min(xs) == ONE


@given(reals, reals, reals)
def test_ordered_group(a, b, c):
    assert compare(a, b) == -compare(b, a)
    assert compare(a + c, b + c) == compare(a, b)
    if compare(a, b) < 0 and compare(b, c) < 0:
        assert compare(a, c) < 0


@given(reals)
def test_roundtrip_and_enclosure(x):
    assert parse(to_text(x)) == x
    lo, hi = enclosure(x, 128)
    assert lo <= hi
    assert float(lo) - 1e-9 <= float(x) <= float(hi) + 1e-9


@given(reals, st.integers(-6, 6))
def test_scaling(x, k):
    assert x * k == exactnum.scale(x, k)
    assert compare(x * k, ZERO) == sign(x) * ((k > 0) - (k < 0))
