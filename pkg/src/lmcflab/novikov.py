"""Truncated one-variable Novikov series with exact rational exponents.

A series is a finite sum ``a_0 P^l_0 + a_1 P^l_1 + ...`` with strictly
increasing exponents, nonzero coefficients in a field and every exponent
below an explicit truncation level.  Everything at or above the truncation
is treated as "higher order" and discarded.

Exponents are :class:`fractions.Fraction` so that the sign of the leading
exponent (membership in the nonnegative subring) is decided exactly.
Floating point exponents coming from a simulation must go through
:func:`rationalize` first.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

__all__ = [
    "CoefficientField",
    "QQ",
    "GF2",
    "Membership",
    "NovikovSeries",
    "FieldMismatchError",
    "rationalize",
    "nv_normalize",
    "nv_add",
    "nv_mul",
    "nv_shift",
    "nv_valuation",
    "nv_classify",
    "monomial",
    "parse_series",
]

Number = Union[int, Fraction, float]
INF = math.inf


class FieldMismatchError(ValueError):
    """Raised when two series over different coefficient fields are combined."""


class CoefficientField(enum.Enum):
    """Coefficient field tag: exact rationals or the two-element field."""

    RATIONAL = "QQ"
    TWO = "GF2"

    def coerce(self, value) -> Union[Fraction, int]:
        if self is CoefficientField.RATIONAL:
            if isinstance(value, float):
                raise TypeError("float coefficients are not exact; pass a Fraction")
            return Fraction(value)
        if isinstance(value, Fraction):
            if value.denominator % 2 == 0:
                raise ZeroDivisionError("denominator not invertible in GF(2)")
            return value.numerator % 2
        return int(value) % 2

    def zero(self):
        return self.coerce(0)

    def one(self):
        return self.coerce(1)

    def inverse(self, value):
        value = self.coerce(value)
        if value == 0:
            raise ZeroDivisionError("division by zero in coefficient field")
        if self is CoefficientField.TWO:
            return 1
        return 1 / value

    def add(self, a, b):
        if self is CoefficientField.TWO:
            return (a + b) % 2
        return a + b

    def mul(self, a, b):
        if self is CoefficientField.TWO:
            return (a * b) % 2
        return a * b

    def neg(self, a):
        if self is CoefficientField.TWO:
            return a % 2
        return -a


QQ = CoefficientField.RATIONAL
GF2 = CoefficientField.TWO


class Membership(enum.Enum):
    POSITIVE = "in Λ⁺"
    NONNEGATIVE_ONLY = "in Λ^{≥0} only"
    NEGATIVE = "not in Λ^{≥0}"
    ZERO = "zero"


def rationalize(value: Number, denominator: int = 10**9) -> Fraction:
    """Round a real number onto the grid ``Z / denominator``.

    Exact inputs (int, Fraction) pass through unchanged.
    """
    if isinstance(value, Rational):
        return Fraction(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot rationalize non-finite exponent {value!r}")
    return Fraction(round(value * denominator), denominator)


def _exact(value) -> Fraction:
    if isinstance(value, Rational):
        return Fraction(value)
    raise TypeError(f"exponent {value!r} is not exact; use rationalize() first")


def _truncation(value):
    if value is None or value == INF:
        return INF
    return _exact(value)


@dataclass(frozen=True)
class NovikovSeries:
    """Normal-form truncated series; build through :func:`nv_normalize`."""

    terms: tuple = ()
    truncation: Union[Fraction, float] = INF
    field: CoefficientField = QQ

    # ------------------------------------------------------------------
    # construction helpers
    @classmethod
    def zero(cls, truncation=INF, field=QQ) -> "NovikovSeries":
        return cls((), _truncation(truncation), field)

    @classmethod
    def one(cls, truncation=INF, field=QQ) -> "NovikovSeries":
        return nv_normalize([(0, field.one())], truncation, field)

    # ------------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def exponents(self) -> tuple:
        return tuple(e for e, _ in self.terms)

    @property
    def coefficients(self) -> tuple:
        return tuple(c for _, c in self.terms)

    def valuation(self):
        return self.terms[0][0] if self.terms else INF

    def leading_coefficient(self):
        if not self.terms:
            raise ValueError("zero series has no leading coefficient")
        return self.terms[0][1]

    def classify(self) -> Membership:
        if not self.terms:
            return Membership.ZERO
        v = self.terms[0][0]
        if v > 0:
            return Membership.POSITIVE
        if v == 0:
            return Membership.NONNEGATIVE_ONLY
        return Membership.NEGATIVE

    def shift(self, amount) -> "NovikovSeries":
        amount = _exact(amount)
        return nv_normalize(
            [(e + amount, c) for e, c in self.terms], self.truncation, self.field
        )

    def with_truncation(self, truncation) -> "NovikovSeries":
        return nv_normalize(self.terms, truncation, self.field)

    def scale(self, coefficient) -> "NovikovSeries":
        c = self.field.coerce(coefficient)
        return nv_normalize(
            [(e, self.field.mul(c, a)) for e, a in self.terms], self.truncation, self.field
        )

    def inverse(self) -> "NovikovSeries":
        """Inverse of a valuation-zero series with invertible leading term.

        Only finitely many terms survive when the truncation is finite;
        an infinite truncation is accepted only for monomials.
        """
        if not self.terms or self.terms[0][0] != 0:
            raise ValueError("only valuation-0 series are invertible here")
        f = self.field
        c0 = f.inverse(self.terms[0][1])
        rest = [(e, f.mul(c0, c)) for e, c in self.terms[1:]]
        if not rest:
            return nv_normalize([(0, c0)], self.truncation, f)
        if self.truncation == INF:
            raise ValueError("inverse of a non-monomial needs a finite truncation")
        # a = c0^{-1}(1 + r) with r in Λ⁺, so a^{-1} = c0 * sum (-r)^k
        r = nv_normalize([(e, f.neg(c)) for e, c in rest], self.truncation, f)
        total = NovikovSeries.one(self.truncation, f)
        power = total
        while not power.is_zero():
            power = power * r
            total = total + power
        return total.scale(c0)

    # ------------------------------------------------------------------
    # ring structure
    def _check(self, other: "NovikovSeries") -> None:
        if not isinstance(other, NovikovSeries):
            raise TypeError(f"cannot combine NovikovSeries with {type(other).__name__}")
        if other.field is not self.field:
            raise FieldMismatchError(f"{self.field.value} vs {other.field.value}")

    def __add__(self, other):
        self._check(other)
        return nv_normalize(
            list(self.terms) + list(other.terms),
            min(self.truncation, other.truncation),
            self.field,
        )

    def __neg__(self):
        f = self.field
        return NovikovSeries(tuple((e, f.neg(c)) for e, c in self.terms), self.truncation, f)

    def __sub__(self, other):
        self._check(other)
        return self + (-other)

    def __mul__(self, other):
        self._check(other)
        f = self.field
        trunc = min(self.truncation, other.truncation)
        raw = []
        for ea, ca in self.terms:
            for eb, cb in other.terms:
                e = ea + eb
                if e < trunc:
                    raw.append((e, f.mul(ca, cb)))
        return nv_normalize(raw, trunc, f)

    def __str__(self) -> str:
        return format_series(self)


def nv_normalize(raw: Iterable, truncation=INF, field: CoefficientField = QQ) -> NovikovSeries:
    """Merge equal exponents, drop zero coefficients and terms at or above truncation."""
    trunc = _truncation(truncation)
    acc: dict = {}
    for exponent, coefficient in raw:
        e = _exact(exponent)
        if e >= trunc:
            continue
        c = field.coerce(coefficient)
        acc[e] = field.add(acc[e], c) if e in acc else c
    terms = tuple((e, acc[e]) for e in sorted(acc) if acc[e] != 0)
    return NovikovSeries(terms, trunc, field)


def monomial(exponent, coefficient=1, truncation=INF, field=QQ) -> NovikovSeries:
    return nv_normalize([(exponent, coefficient)], truncation, field)


def nv_add(a: NovikovSeries, b: NovikovSeries) -> NovikovSeries:
    return a + b


def nv_mul(a: NovikovSeries, b: NovikovSeries) -> NovikovSeries:
    return a * b


def nv_shift(a: NovikovSeries, amount) -> NovikovSeries:
    """Multiply by ``P**amount``; ``amount`` may be negative."""
    return a.shift(amount)


def nv_valuation(a: NovikovSeries):
    return a.valuation()


def nv_classify(a: NovikovSeries) -> Membership:
    return a.classify()


# ----------------------------------------------------------------------
# text form: "a1*P^l1 + a2*P^l2 (trunc L)"

def _fmt_fraction(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_series(a: NovikovSeries) -> str:
    body = " + ".join(f"{_fmt_fraction(c)}*P^{_fmt_fraction(e)}" for e, c in a.terms) or "0"
    trunc = "inf" if a.truncation == INF else _fmt_fraction(a.truncation)
    return f"{body} (trunc {trunc})"


_TERM = re.compile(r"^\s*(-?\d+(?:/\d+)?)\*P\^(-?\d+(?:/\d+)?)\s*$")
_TRAILER = re.compile(r"^(.*)\(trunc\s+(inf|-?\d+(?:/\d+)?)\)\s*$")


def parse_series(text: str, field: CoefficientField = QQ) -> NovikovSeries:
    m = _TRAILER.match(text.strip())
    if not m:
        raise ValueError(f"missing '(trunc L)' trailer in {text!r}")
    body, trunc = m.group(1).strip(), m.group(2)
    truncation = INF if trunc == "inf" else Fraction(trunc)
    raw = []
    if body != "0":
        for chunk in body.split(" + "):
            tm = _TERM.match(chunk)
            if not tm:
                raise ValueError(f"bad term {chunk!r}")
            raw.append((Fraction(tm.group(2)), Fraction(tm.group(1))))
    return nv_normalize(raw, truncation, field)
