"""Exact arithmetic in the rational module Q + Q*xi1 + Q*xi2.

The two generators are square roots of positive non-square rationals
(default sqrt(2) and sqrt(3)).  Equality is decided on coefficients; strict
ordering is decided by a float fast path with a certified error bound and,
failing that, by mpmath interval evaluation at escalating precision.
"""
from __future__ import annotations

import math
import re
from contextlib import contextmanager
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Union

from mpmath import iv

Rational = Union[int, Fraction]

MIN_BITS = 64
MAX_BITS = 4096


class IndependenceViolation(ArithmeticError):
    """A structurally nonzero element could not be separated from zero."""


class PrecisionExhausted(IndependenceViolation):
    pass


@contextmanager
def ivprec(bits: int):
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


class _Generators:
    def __init__(self, r1: Rational = 2, r2: Rational = 3):
        self.set(r1, r2)

    def set(self, r1: Rational, r2: Rational) -> None:
        r1, r2 = Fraction(r1), Fraction(r2)
        if r1 <= 0 or r2 <= 0:
            raise ValueError("generator radicands must be positive")
        self.radicands = (r1, r2)
        self.floats = (math.sqrt(r1), math.sqrt(r2))
        self._enclosures: dict[int, tuple] = {}

    def enclosure(self, bits: int):
        if bits not in self._enclosures:
            with ivprec(bits):
                self._enclosures[bits] = tuple(
                    iv.sqrt(iv.mpf(r.numerator) / r.denominator) for r in self.radicands
                )
        return self._enclosures[bits]


GENERATORS = _Generators()


def set_generators(r1: Rational, r2: Rational) -> None:
    """Override the radicands of xi1, xi2 (xi_i = sqrt(r_i)).

    Values that are not rationally independent with 1 surface later as
    IndependenceViolation from :func:`compare`.
    """
    GENERATORS.set(r1, r2)


def generator_radicands() -> tuple[Fraction, Fraction]:
    return GENERATORS.radicands


_EPS = 2.0 ** -50


@total_ordering
class ExactReal:
    """q0 + q1*xi1 + q2*xi2 with rational coefficients."""

    __slots__ = ("q", "_hash", "_approx")

    def __init__(self, q0: Rational = 0, q1: Rational = 0, q2: Rational = 0):
        self.q = (Fraction(q0), Fraction(q1), Fraction(q2))
        self._hash = None
        self._approx = None

    @classmethod
    def _from(cls, q: tuple) -> "ExactReal":
        obj = cls.__new__(cls)
        obj.q = q
        obj._hash = None
        obj._approx = None
        return obj

    @classmethod
    def coerce(cls, x) -> "ExactReal":
        if isinstance(x, ExactReal):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x)
        if isinstance(x, str):
            return parse(x)
        raise TypeError(f"cannot convert {type(x).__name__} to ExactReal")

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, ExactReal):
            if isinstance(other, (int, Fraction)):
                a, b, c = self.q
                return ExactReal._from((a + other, b, c))
            return NotImplemented
        a, b, c = self.q
        x, y, z = other.q
        return ExactReal._from((a + x, b + y, c + z))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, ExactReal):
            if isinstance(other, (int, Fraction)):
                a, b, c = self.q
                return ExactReal._from((a - other, b, c))
            return NotImplemented
        a, b, c = self.q
        x, y, z = other.q
        return ExactReal._from((a - x, b - y, c - z))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        a, b, c = self.q
        return ExactReal._from((-a, -b, -c))

    def __mul__(self, k):
        if isinstance(k, ExactReal):
            if k.q[1] or k.q[2]:
                if self.q[1] or self.q[2]:
                    raise TypeError("product of two irrational ExactReals leaves the module")
                return k * self.q[0]
            k = k.q[0]
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        a, b, c = self.q
        return ExactReal._from((a * k, b * k, c * k))

    __rmul__ = __mul__

    def __truediv__(self, k):
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        k = Fraction(k)
        a, b, c = self.q
        return ExactReal._from((a / k, b / k, c / k))

    # comparison -------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.q[0] == other and not self.q[1] and not self.q[2]
        if not isinstance(other, ExactReal):
            return NotImplemented
        return self.q == other.q

    def __hash__(self):
        if self._hash is None:
            a, b, c = self.q
            self._hash = hash(a) if not (b or c) else hash(self.q)
        return self._hash

    def __lt__(self, other):
        other = ExactReal.coerce(other)
        return sign(self - other) < 0

    def sign(self) -> int:
        return sign(self)

    def is_rational(self) -> bool:
        return not self.q[1] and not self.q[2]

    def __float__(self):
        if self._approx is None:
            a, b, c = self.q
            f1, f2 = GENERATORS.floats
            self._approx = float(a) + float(b) * f1 + float(c) * f2
        return self._approx

    def __repr__(self):
        return f"ExactReal({to_text(self)!r})"

    def __str__(self):
        return to_text(self)


ZERO = ExactReal(0)
ONE = ExactReal(1)
XI1 = ExactReal(0, 1, 0)
XI2 = ExactReal(0, 0, 1)


def add(a: ExactReal, b: ExactReal) -> ExactReal:
    return a + b


def negate(a: ExactReal) -> ExactReal:
    return -a


def scale(a: ExactReal, k: Rational) -> ExactReal:
    return a * Fraction(k)


def sign(x: ExactReal) -> int:
    a, b, c = x.q
    if not b and not c:
        return (a > 0) - (a < 0)
    f1, f2 = GENERATORS.floats
    fa, fb, fc = float(a), float(b), float(c)
    approx = fa + fb * f1 + fc * f2
    bound = _EPS * (abs(fa) + abs(fb) * f1 + abs(fc) * f2) + 1e-300
    if approx > bound:
        return 1
    if approx < -bound:
        return -1
    return _interval_sign(x)


def _interval_sign(x: ExactReal) -> int:
    bits = MIN_BITS
    while bits <= MAX_BITS:
        with ivprec(bits):
            s1, s2 = GENERATORS.enclosure(bits)
            val = iv.mpf(0)
            for coef, gen in zip(x.q, (iv.mpf(1), s1, s2)):
                if coef:
                    val += gen * iv.mpf(coef.numerator) / coef.denominator
            if val.a > 0:
                return 1
            if val.b < 0:
                return -1
        bits *= 2
    raise IndependenceViolation(
        f"cannot separate {to_text(x)} from 0 within {MAX_BITS} bits; "
        f"generators sqrt({GENERATORS.radicands[0]}), sqrt({GENERATORS.radicands[1]}) "
        "look rationally dependent"
    )


def compare(a: ExactReal, b: ExactReal) -> int:
    """-1, 0, 1 as a < b, a == b, a > b."""
    if a == b:
        return 0
    return sign(a - b)


def exact_max(xs: Iterable[ExactReal]) -> ExactReal:
    it = iter(xs)
    best = next(it)
    for x in it:
        if compare(x, best) > 0:
            best = x
    return best


def exact_min(xs: Iterable[ExactReal]) -> ExactReal:
    it = iter(xs)
    best = next(it)
    for x in it:
        if compare(x, best) < 0:
            best = x
    return best


def enclosure(x: ExactReal, bits: int = 128) -> tuple:
    """Rigorous (lo, hi) mpf pair containing x."""
    with ivprec(bits):
        s1, s2 = GENERATORS.enclosure(bits)
        val = iv.mpf(0)
        for coef, gen in zip(x.q, (iv.mpf(1), s1, s2)):
            if coef:
                val += gen * iv.mpf(coef.numerator) / coef.denominator
        return val.a, val.b


# text form -----------------------------------------------------------------

def _frac_text(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def to_text(x: ExactReal) -> str:
    """Canonical text "q0 + q1*xi1 + q2*xi2" (zero terms dropped)."""
    a, b, c = x.q
    parts = []
    for coef, name in ((a, ""), (b, "xi1"), (c, "xi2")):
        if not coef:
            continue
        body = _frac_text(abs(coef))
        if name:
            body = name if abs(coef) == 1 else f"{body}*{name}"
        parts.append(("-" if coef < 0 else "+", body))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for s, body in parts[1:]:
        out += f" {s} {body}"
    return out


_TERM = re.compile(r"([+-]?)\s*(\d+(?:/\d+)?)?\s*\*?\s*(xi1|xi2)?")


def parse(text: str) -> ExactReal:
    """Inverse of :func:`to_text`; accepts e.g. "3 + 2*xi1 - 1/2*xi2"."""
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty exact-real literal")
    coefs = [Fraction(0)] * 3
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise ValueError(f"bad exact-real literal: {text!r}")
        sgn = -1 if m.group(1) == "-" else 1
        if pos > 0 and not m.group(1):
            raise ValueError(f"bad exact-real literal: {text!r}")
        coef = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        idx = {None: 0, "xi1": 1, "xi2": 2}[m.group(3)]
        coefs[idx] += sgn * coef
        pos = m.end()
    return ExactReal(*coefs)
