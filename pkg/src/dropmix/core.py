"""Exact dyadic concentrations.

A concentration is stored as ``num / 2**exp`` in lowest terms: either
``exp == 0`` or ``num`` is odd.  Everything downstream (mixing graphs,
gadget search, sweeps) relies on these values being exact, so floats never
appear here.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import NamedTuple


class ConcentrationError(ValueError):
    """Raised for values outside [0, 1], malformed text or undefined attributes."""


class Concentration(NamedTuple):
    num: int
    exp: int

    def __lt__(self, other):
        return self.num << other.exp < other.num << self.exp

    def __le__(self, other):
        return self.num << other.exp <= other.num << self.exp

    def __gt__(self, other):
        return self.num << other.exp > other.num << self.exp

    def __ge__(self, other):
        return self.num << other.exp >= other.num << self.exp

    def __str__(self):
        return f"{self.num}/2^{self.exp}"

    def __repr__(self):
        return f"Concentration({self.num}/2^{self.exp})"

    def __float__(self):
        return self.num / (1 << self.exp)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def bits(self) -> str:
        """Fractional binary digits, e.g. ``'0111'`` for 7/16."""
        if self.exp == 0:
            return ""
        return format(self.num, "b").zfill(self.exp)


ZERO = Concentration(0, 0)
ONE = Concentration(1, 0)
HALF = Concentration(1, 1)


def _reduce(num: int, exp: int) -> Concentration:
    # strip trailing zero bits without range checks (hot path)
    if num == 0:
        return ZERO
    tz = (num & -num).bit_length() - 1
    if tz >= exp:
        return Concentration(num >> exp, 0)
    return Concentration(num >> tz, exp - tz)


def normalize(numerator: int, exponent: int) -> Concentration:
    """Canonical form of ``numerator / 2**exponent``."""
    if exponent < 0:
        raise ConcentrationError(f"negative exponent {exponent}")
    if numerator < 0 or numerator > (1 << exponent):
        raise ConcentrationError(f"{numerator}/2^{exponent} is outside [0, 1]")
    return _reduce(numerator, exponent)


def conc(value) -> Concentration:
    """Coerce a Concentration, Fraction, int or parseable string."""
    if isinstance(value, Concentration):
        return value
    if isinstance(value, str):
        return parse_target(value)
    if isinstance(value, tuple) and len(value) == 2:
        return normalize(*value)
    f = Fraction(value)
    den = f.denominator
    if den & (den - 1):
        raise ConcentrationError(f"{value} is not dyadic")
    return normalize(f.numerator, den.bit_length() - 1)


def prec(c: Concentration) -> int:
    return c.exp


def gamma(t: Concentration) -> int:
    """Length of the leading run of equal bits of ``t``, excluding the final 1 bit."""
    d = t.exp
    if d == 0:
        raise ConcentrationError(f"gamma is undefined for {t}")
    if t.num >> (d - 1):
        run = d - ((~t.num) & ((1 << d) - 1)).bit_length()
    else:
        run = d - t.num.bit_length()
    return min(run, d - 1)


def mix_value(a: Concentration, b: Concentration) -> Concentration:
    ea, eb = a.exp, b.exp
    if ea >= eb:
        return _reduce(a.num + (b.num << (ea - eb)), ea + 1)
    return _reduce((a.num << (eb - ea)) + b.num, eb + 1)


def mirror_value(c: Concentration) -> Concentration:
    if c.exp == 0:
        return ONE if c.num == 0 else ZERO
    return Concentration((1 << c.exp) - c.num, c.exp)


def affine(c: Concentration, beta_exp: int, beta_sign: int, alpha: Concentration) -> Concentration:
    """``alpha + beta_sign * c / 2**beta_exp``, checked to stay in [0, 1]."""
    e = max(alpha.exp, c.exp + beta_exp)
    num = (alpha.num << (e - alpha.exp)) + beta_sign * (c.num << (e - c.exp - beta_exp))
    if num < 0 or num > (1 << e):
        raise ConcentrationError(f"affine image of {c} leaves [0, 1]")
    return _reduce(num, e)


_POW2 = re.compile(r"^\s*(\d+)\s*/\s*2\^(\d+)\s*$")
_RATIO = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")
_COLON = re.compile(r"^\s*(\d+)\s*:\s*(\d+)\s*$")
_BINARY = re.compile(r"^\s*0?\.([01]*)\s*$")


def parse_target(text: str) -> Concentration:
    """Parse ``a/2^d``, ``a/b`` with b a power of two, ``.bbbb`` or ``a:d``."""
    m = _POW2.match(text)
    if m:
        return normalize(int(m.group(1)), int(m.group(2)))
    m = _COLON.match(text)
    if m:
        return normalize(int(m.group(1)), int(m.group(2)))
    m = _RATIO.match(text)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0 or den & (den - 1):
            raise ConcentrationError(f"{text!r} has a non-dyadic denominator")
        return normalize(num, den.bit_length() - 1)
    m = _BINARY.match(text)
    if m:
        digits = m.group(1)
        return normalize(int(digits, 2) if digits else 0, len(digits))
    if text.strip() in ("0", "1"):
        return ZERO if text.strip() == "0" else ONE
    raise ConcentrationError(f"cannot parse concentration {text!r}")


def side(t: Concentration) -> str:
    """``'low'`` for t < 1/4, ``'high'`` for t > 3/4, else ``'middle'``."""
    if t.num << 2 < 1 << t.exp:
        return "low"
    if t.num << 2 > 3 << t.exp:
        return "high"
    return "middle"


class TargetAttrs(NamedTuple):
    d: int
    gamma: int
    side: str


def target_attrs(t: Concentration) -> TargetAttrs:
    return TargetAttrs(prec(t), gamma(t), side(t))


def all_targets(d: int):
    """Every concentration of precision exactly ``d``, ascending."""
    return [Concentration(a, d) for a in range(1, 1 << d, 2)]
