"""Regular moment sequences m(0)=1, m(1), m(2), ... of positive order s.

Two kinds are supported:

* ``gamma``: m(j) = Gamma(1 + s*j).  For integer s every ratio
  m(j+1)/m(j) = (sj+1)(sj+2)...(sj+s) is an integer and all derived
  quantities stay exact.
* ``ratio``: the ratios m(j+1)/m(j) are given by a finite table or by a
  callable.  Rational tables are exact.

Regularity means a(j+1)^s <= m(j+1)/m(j) <= A(j+1)^s for constants 0 < a <= A.
Custom ratios are checked against an envelope (by default the one proven for
Gamma(1+s*j) via Stirling's formula) and rejected with the failing index.
"""
from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from ._arith import is_exact, normalize, rational, rpow, to_mpf

_RATIO_BITS = 96


class NonRegularMomentError(ValueError):
    def __init__(self, index: int, value, envelope):
        self.index = index
        super().__init__(
            f"moment ratio at j={index} gives m(j+1)/m(j)/(j+1)^s = {value}, "
            f"outside the regularity envelope [{envelope[0]}, {envelope[1]}]"
        )


def gamma_envelope(s) -> tuple[float, float]:
    """Analytic bounds on Gamma(1+s(j+1))/Gamma(1+sj)/(j+1)^s, valid for all j."""
    s = float(s)
    lo = math.exp(-s - 1) * s ** s
    hi = (1 + 1 / s) ** s * math.e * s ** s
    return lo, hi


class MomentSequence:
    """An immutable regular moment sequence with memoized values."""

    def __init__(
        self,
        order,
        kind: str = "gamma",
        ratios: Sequence | Callable[[int], object] | None = None,
        envelope: tuple[float, float] | None = None,
    ):
        self.order = rational(order)
        if self.order <= 0:
            raise ValueError(f"moment order must be positive, got {self.order}")
        if kind not in ("gamma", "ratio"):
            raise ValueError(f"unknown moment kind {kind!r}")
        self.kind = kind
        self.envelope = envelope or gamma_envelope(self.order)
        self._lock = threading.Lock()
        self._values: list = [1]
        self._logs: list[float] = [0.0]
        self._fn = None
        self._table = None
        if kind == "gamma":
            self.exact = self.order.denominator == 1
        else:
            if ratios is None:
                raise ValueError("ratio kind needs a table or a callable")
            if callable(ratios):
                self._fn = ratios
                self._checked: set[int] = set()
                self.exact = is_exact(ratios(0))
            else:
                table = [normalize(rational(r)) if not isinstance(r, float) else r for r in ratios]
                self.exact = all(is_exact(r) for r in table)
                for j, r in enumerate(table):
                    self._check(j, r)
                self._table = table

    @classmethod
    def gamma(cls, s=1) -> "MomentSequence":
        return cls(s, "gamma")

    @classmethod
    def from_ratios(cls, values, order=1, envelope=None) -> "MomentSequence":
        return cls(order, "ratio", list(values) if not callable(values) else values, envelope)

    def __repr__(self):
        if self.kind == "gamma":
            return f"MomentSequence.gamma({self.order})"
        return f"MomentSequence(order={self.order}, kind='ratio')"

    def __eq__(self, other):
        if not isinstance(other, MomentSequence):
            return NotImplemented
        if self.kind != other.kind or self.order != other.order:
            return False
        if self.kind == "gamma":
            return True
        return self._table is not None and self._table == other._table

    def __hash__(self):
        return hash((self.kind, self.order))

    # -- ratios -------------------------------------------------------------

    def _check(self, j: int, r):
        if not r > 0:
            raise NonRegularMomentError(j, r, self.envelope)
        scaled = float(to_mpf(r) / to_mpf(Fraction(j + 1)) ** to_mpf(self.order))
        lo, hi = self.envelope
        if not (lo <= scaled <= hi):
            raise NonRegularMomentError(j, scaled, self.envelope)

    def ratio(self, j: int):
        """m(j+1)/m(j): an int/Fraction when exact, otherwise an mpf."""
        if j < 0:
            raise ValueError("j must be nonnegative")
        if self.kind == "gamma":
            if self.exact:
                s = self.order.numerator
                return math.prod(range(s * j + 1, s * j + s + 1))
            with mpmath.workprec(_RATIO_BITS):
                s = to_mpf(self.order)
                return +mpmath.rf(1 + s * j, s)
        if self._table is not None:
            if j >= len(self._table):
                raise IndexError(f"ratio table exhausted at j={j} (length {len(self._table)})")
            return self._table[j]
        r = self._fn(j)
        if j not in self._checked:
            self._check(j, r)
            self._checked.add(j)
        return normalize(r) if is_exact(r) else to_mpf(r)

    # -- values -------------------------------------------------------------

    def value(self, j: int):
        """m(j): exact (int/Fraction) when the sequence is exact, else an mpf."""
        if self.kind == "gamma" and not self.exact:
            return mpmath.gamma(1 + to_mpf(self.order) * j)
        if not self.exact:
            out = mpmath.mpf(1)
            for k in range(j):
                out *= to_mpf(self.ratio(k))
            return out
        with self._lock:
            vals = self._values
            while len(vals) <= j:
                vals.append(normalize(vals[-1] * self.ratio(len(vals) - 1)))
            return vals[j]

    def value_log(self, j: int) -> float:
        """log m(j), computed without ever forming m(j)."""
        if j < 0:
            raise ValueError("j must be nonnegative")
        if self.kind == "gamma":
            with mpmath.workprec(_RATIO_BITS):
                return float(mpmath.loggamma(1 + to_mpf(self.order) * j))
        with self._lock:
            logs = self._logs
            while len(logs) <= j:
                k = len(logs) - 1
                logs.append(logs[-1] + float(mpmath.log(to_mpf(self.ratio(k)))))
            return logs[j]

    def multinomial(self, j: int, parts: Sequence[int]):
        """Moment multinomial m(j) / (m(j_0) ... m(j_k))."""
        if any(p < 0 for p in parts):
            raise ValueError("parts must be nonnegative")
        if sum(parts) != j:
            raise ValueError(f"parts {list(parts)} do not sum to {j}")
        if self.exact:
            den = math.prod(self.value(p) for p in parts)
            return normalize(Fraction(self.value(j)) / den)
        out = to_mpf(self.value(j))
        for p in parts:
            out /= to_mpf(self.value(p))
        return out

    def binomial(self, n: int, k: int):
        return self.multinomial(n, (k, n - k))

    # -- regularity ---------------------------------------------------------

    def regularity_bounds(self, j_max: int):
        """(a, A): min and max of m(j+1)/m(j)/(j+1)^s over 0 <= j < j_max."""
        if j_max < 1:
            raise ValueError("j_max must be >= 1")
        s = self.order
        if self.exact and s.denominator == 1:
            scaled = [Fraction(self.ratio(j)) / (j + 1) ** s.numerator for j in range(j_max)]
            a, A = normalize(min(scaled)), normalize(max(scaled))
        elif self.kind == "gamma":
            a, A = self._gamma_bounds_float(j_max)
        else:
            with mpmath.workprec(_RATIO_BITS):
                scaled = [to_mpf(self.ratio(j)) / rpow(j + 1, s) for j in range(j_max)]
            a, A = min(scaled), max(scaled)
        lo, hi = self.envelope
        if not (lo <= a and A <= hi):
            bad = a if a < lo else A
            raise NonRegularMomentError(j_max - 1, bad, self.envelope)
        return a, A

    def _gamma_bounds_float(self, j_max: int):
        # log-domain to stay fast for j up to 10^4
        with mpmath.workprec(_RATIO_BITS):
            s = to_mpf(self.order)
            lg = [mpmath.loggamma(1 + s * j) for j in range(j_max + 1)]
            scaled = [mpmath.exp(lg[j + 1] - lg[j] - s * mpmath.log(j + 1)) for j in range(j_max)]
        return min(scaled), max(scaled)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "gamma":
            return {"kind": "gamma", "s": str(self.order)}
        if self._table is None:
            raise ValueError("callable ratio sequences cannot be serialized")
        return {"kind": "ratio", "s": str(self.order), "values": [str(v) for v in self._table]}

    @classmethod
    def from_json(cls, doc: dict) -> "MomentSequence":
        if doc["kind"] == "gamma":
            return cls.gamma(rational(doc["s"]))
        if doc["kind"] == "ratio":
            return cls.from_ratios([rational(v) for v in doc["values"]], rational(doc.get("s", 1)))
        raise ValueError(f"unknown moment kind {doc['kind']!r}")
