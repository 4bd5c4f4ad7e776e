"""Moment Newton polygon and critical value, in exact rationals.

Each term t^v a (Dt^{i_1} Dx^{q_1} u)^{r_1} ... contributes the support point

    ( sum_l r_l (s_0 i_l + lambda(s q_l)),  v - sum_l r_l i_l )

and the operator Dt^kappa contributes the principal point (s_0 kappa, -kappa).
Only the lower-right chain starting at the principal point carries positive
slopes, so that chain is all we store.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .equation import EquationSpec, Term, errors, validate

__all__ = [
    "SupportPoint",
    "NewtonPolygon",
    "SlopeReport",
    "MalformedSpecError",
    "support_point",
    "build",
    "check_slope_inequality",
    "hull_csv",
    "format_sigma",
]

PRINCIPAL = "principal"


class MalformedSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SupportPoint:
    x: Fraction
    y: Fraction
    origin: object  # term index or PRINCIPAL


@dataclass(frozen=True)
class NewtonPolygon:
    s0: Fraction
    kappa: int
    points: tuple
    hull: tuple  # vertices (x, y) of the chain, principal point first
    positive_slopes: tuple
    S: tuple  # indices of terms with abscissa > s0*kappa
    sigma_c: Fraction
    kstar: int | None

    @property
    def principal(self) -> SupportPoint:
        return self.points[0]

    def term_point(self, t: int) -> SupportPoint:
        return self.points[t + 1]


def _lam(s: Sequence[Fraction], q: Sequence[int]) -> Fraction:
    return sum((sd * qd for sd, qd in zip(s, q)), Fraction(0))


def support_point(term: Term, s0: Fraction, s: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    x = sum((f.r * (s0 * f.i + _lam(s, f.q)) for f in term.factors), Fraction(0))
    return x, Fraction(term.v - term.weighted_i)


def _chain(start: tuple, pts: list[tuple]) -> list[tuple]:
    """Lower convex chain from ``start`` through points to its right (gift wrapping)."""
    hull = [start]
    cur = start
    while True:
        right = [p for p in pts if p[0] > cur[0]]
        if not right:
            return hull
        best = min((p[1] - cur[1]) / (p[0] - cur[0]) for p in right)
        # farthest point on the supporting line becomes the next vertex
        cur = max(p for p in right if (p[1] - cur[1]) / (p[0] - cur[0]) == best)
        hull.append(cur)


def _tie_key(term: Term):
    return (term.v, tuple((f.i, f.q, f.r) for f in term.factors))


def build(spec: EquationSpec) -> NewtonPolygon:
    bad = errors(validate(spec))
    if bad:
        raise MalformedSpecError("; ".join(str(d) for d in bad))
    s0, s, kappa = spec.s0, spec.s, spec.kappa
    principal = (s0 * kappa, Fraction(-kappa))
    points = [SupportPoint(principal[0], principal[1], PRINCIPAL)]
    S = []
    sigma_c = Fraction(0)
    kstar = None
    for t_no, term in enumerate(spec.terms):
        x, y = support_point(term, s0, s)
        points.append(SupportPoint(x, y, t_no))
        if x > principal[0]:
            S.append(t_no)
            den = kappa + term.v - term.weighted_i
            if den <= 0:
                raise MalformedSpecError(f"term {t_no}: kappa + v - sum r_l i_l = {den} <= 0")
            ratio = (x - principal[0]) / den
            if (
                kstar is None
                or ratio > sigma_c
                or (ratio == sigma_c and _tie_key(term) < _tie_key(spec.terms[kstar]))
            ):
                sigma_c, kstar = ratio, t_no
    hull = _chain(principal, [(p.x, p.y) for p in points[1:] if p.origin in S])
    slopes = tuple((b[1] - a[1]) / (b[0] - a[0]) for a, b in zip(hull, hull[1:]))
    return NewtonPolygon(
        s0=s0,
        kappa=kappa,
        points=tuple(points),
        hull=tuple(hull),
        positive_slopes=tuple(k for k in slopes if k > 0),
        S=tuple(S),
        sigma_c=sigma_c,
        kstar=kstar,
    )


@dataclass(frozen=True)
class SlopeReport:
    sigma: Fraction
    margins: tuple  # one exact margin per term, in term order
    ok: bool

    @property
    def violations(self) -> list[int]:
        return [t for t, m in enumerate(self.margins) if m < 0]


def check_slope_inequality(poly: NewtonPolygon, spec: EquationSpec, sigma) -> SlopeReport:
    """Margins (sigma+s0)(kappa+v-sum r i) - (s0 v + sum r lambda(s q)) per term.

    For sigma >= sigma_c every margin is nonnegative; a negative one at such
    sigma would mean the polygon itself is wrong.
    """
    sigma = Fraction(sigma)
    s0, s = spec.s0, spec.s
    margins = []
    for term in spec.terms:
        lhs = (sigma + s0) * (spec.kappa + term.v - term.weighted_i)
        rhs = s0 * term.v + sum((f.r * _lam(s, f.q) for f in term.factors), Fraction(0))
        margins.append(lhs - rhs)
    return SlopeReport(sigma, tuple(margins), all(m >= 0 for m in margins))


def format_sigma(x: Fraction) -> str:
    """``0`` for zero, otherwise always ``p/q`` (so 1 prints as ``1/1``)."""
    x = Fraction(x)
    if x == 0:
        return "0"
    return f"{x.numerator}/{x.denominator}"


def hull_csv(poly: NewtonPolygon) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "x", "y", "slope", "term_id"])
    for p in poly.points:
        w.writerow(["point", p.x, p.y, "", p.origin])
    for x, y in poly.hull:
        w.writerow(["hull", x, y, "", ""])
    for k in poly.positive_slopes:
        w.writerow(["slope", "", "", k, ""])
    # sigma_c row: exact value in x, decimal in y
    w.writerow(["sigma_c", format_sigma(poly.sigma_c), f"{float(poly.sigma_c):.6f}", "", ""])
    return buf.getvalue()
