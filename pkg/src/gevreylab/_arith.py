"""Scalar helpers shared by the EXACT (rational) and FLOAT (mpmath) modes."""
from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any

import mpmath

EXACT = "exact"
FLOAT = "float"
DEFAULT_BITS = 128


def default_bits() -> int:
    env = os.environ.get("GEVREYLAB_BITS")
    return int(env) if env else DEFAULT_BITS


def rational(value: Any) -> Fraction:
    """Parse ``value`` ("3/2", "0.25", 2, Fraction) into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def normalize(x):
    """Collapse integral Fractions to int (int arithmetic is much faster)."""
    if type(x) is Fraction and x.denominator == 1:
        return x.numerator
    return x


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def to_mpf(x) -> mpmath.mpf:
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def fmt_scalar(x) -> str:
    """Serialize a scalar: exact values as "p/q", floats as decimal strings."""
    if isinstance(x, (int, Fraction)):
        return str(normalize(Fraction(x)))
    return mpmath.nstr(to_mpf(x), 40, min_fixed=-5, max_fixed=5)


def parse_scalar(text: str, mode: str = EXACT):
    if mode == EXACT:
        return normalize(rational(text))
    return mpmath.mpf(text)


def rpow(base: Fraction, exponent: Fraction):
    """``base**exponent``; exact when the exponent is an integer."""
    base, exponent = rational(base), rational(exponent)
    if exponent.denominator == 1:
        return normalize(base ** exponent.numerator)
    return mpmath.power(to_mpf(base), to_mpf(exponent))


@dataclass(frozen=True)
class Arith:
    """Arithmetic mode of one computation: no mixed precision inside a run."""

    mode: str = EXACT
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if self.mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    def convert(self, x):
        if self.exact:
            if not is_exact(x):
                raise TypeError(f"inexact value {x!r} in EXACT mode")
            return normalize(x)
        return to_mpf(x)

    @contextmanager
    def context(self):
        if self.exact:
            yield
        else:
            with mpmath.workprec(self.bits):
                yield
