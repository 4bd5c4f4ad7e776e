"""Problem data for  Dt^kappa u - P(t, x, (Dt^i Dx^q u)) = f,  Dt^j u(0, x) = phi_j(x).

P is a sum of terms  t^v a(t, x) prod_l (Dt^{i_l} Dx^{q_l} u)^{r_l}.  All
moment derivatives use the sequences m_0 (time) and m_1..m_N (space).

Coefficients, initial data and the inhomogeneity are either finite
polynomial truncations or closed-form generators that expand on demand to
whatever degree cap the solver asks for.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import jsonschema

from ._arith import Arith, normalize, rational, to_mpf
from .moments import MomentSequence
from .series import XSeries, multi_indices

__all__ = [
    "TermFactor",
    "Term",
    "Coefficient",
    "Inhomogeneity",
    "InitialDatum",
    "EquationSpec",
    "Diagnostic",
    "SpecError",
    "validate",
    "errors",
    "load",
    "save",
    "spec_hash",
]


class SpecError(ValueError):
    """Schema or semantic violation; ``pointer`` is a JSON pointer into the document."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


@dataclass(frozen=True, order=True)
class TermFactor:
    i: int
    q: tuple
    r: int = 1

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(int(k) for k in self.q))


@dataclass(frozen=True)
class Coefficient:
    """a(t, x) of one term, in the t^j/m0(j) convention.

    kinds: ``const`` (the number ``value``), ``geom`` (value * prod 1/(1-x_d),
    constant in t) and ``tseries`` (finitely many polynomial entries a_{j,*}).
    """

    kind: str = "const"
    value: Fraction = Fraction(1)
    entries: tuple = ()

    def __post_init__(self):
        if self.kind not in ("const", "geom", "tseries"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        object.__setattr__(self, "value", rational(self.value))
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def const(cls, value) -> "Coefficient":
        return cls("const", rational(value))

    @property
    def t_constant(self) -> bool:
        return self.kind in ("const", "geom") or len(self.entries) <= 1

    def nonzero_at_t0(self) -> bool:
        if self.kind in ("const", "geom"):
            return self.value != 0
        return bool(self.entries) and bool(self.entries[0])

    def expand(self, j: int, dim: int, cap: int, arith: Arith) -> XSeries:
        if self.kind == "tseries":
            if j >= len(self.entries):
                return XSeries.zero(dim, cap)
            e = self.entries[j]
            return XSeries(dim, cap, {i: arith.convert(c) for i, c in e.coeffs.items()})
        if j > 0:
            return XSeries.zero(dim, cap)
        c = arith.convert(self.value)
        if self.kind == "const":
            return XSeries.constant(c, dim, cap)
        return XSeries(dim, cap, {idx: c for idx in multi_indices(dim, cap)})

    def to_json(self) -> dict:
        if self.kind == "tseries":
            return {"kind": "tseries", "entries": [e.to_json() for e in self.entries]}
        return {"kind": self.kind, "value": str(self.value)}


@dataclass(frozen=True)
class Term:
    factors: tuple
    v: int = 0
    coeff: Coefficient = field(default_factory=Coefficient)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def degree(self) -> int:
        """r_1 + ... + r_n: number of u-factors in the product."""
        return sum(f.r for f in self.factors)

    @property
    def weighted_i(self) -> int:
        """sum_l r_l i_l."""
        return sum(f.r * f.i for f in self.factors)

    def to_json(self) -> dict:
        return {
            "v": self.v,
            "coeff": self.coeff.to_json(),
            "factors": [{"i": f.i, "q": list(f.q), "r": f.r} for f in self.factors],
        }


@dataclass(frozen=True)
class Inhomogeneity:
    """f(t, x) in the t^j/m0(j) convention.

    ``gevrey`` generates f_{j,*} = C K^j Gamma(1 + sigma j) m0(j) * profile(x),
    whose ordinary t-coefficients are exactly C K^j Gamma(1 + sigma j) profile(x).
    """

    kind: str = "zero"
    entries: tuple = ()
    sigma: Fraction = Fraction(0)
    C: Fraction = Fraction(1)
    K: Fraction = Fraction(1)
    profile: str = "one"

    def __post_init__(self):
        if self.kind not in ("zero", "tseries", "gevrey"):
            raise ValueError(f"unknown inhomogeneity kind {self.kind!r}")
        if self.profile not in ("one", "geom"):
            raise ValueError(f"unknown profile {self.profile!r}")
        for name in ("sigma", "C", "K"):
            object.__setattr__(self, name, rational(getattr(self, name)))
        object.__setattr__(self, "entries", tuple(self.entries))

    def expand(self, j: int, dim: int, cap: int, m0: MomentSequence, arith: Arith) -> XSeries:
        if self.kind == "zero":
            return XSeries.zero(dim, cap)
        if self.kind == "tseries":
            if j >= len(self.entries):
                return XSeries.zero(dim, cap)
            e = self.entries[j]
            return XSeries(dim, cap, {i: arith.convert(c) for i, c in e.coeffs.items()})
        if self.sigma.denominator == 1:
            gam = math.factorial(self.sigma.numerator * j)
        elif arith.exact:
            raise ValueError("gevrey generator with non-integer sigma needs FLOAT mode")
        else:
            gam = to_mpf_gamma(1 + self.sigma * j)
        scale = arith.convert(normalize(self.C * self.K ** j)) * arith.convert(gam) * arith.convert(m0.value(j))
        if self.profile == "one":
            return XSeries.constant(scale, dim, cap)
        return XSeries(dim, cap, {idx: scale for idx in multi_indices(dim, cap)})

    def to_json(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "tseries":
            return {"kind": "tseries", "entries": [e.to_json() for e in self.entries]}
        return {
            "kind": "gevrey",
            "sigma": str(self.sigma),
            "C": str(self.C),
            "K": str(self.K),
            "profile": self.profile,
        }


def to_mpf_gamma(x):
    import mpmath

    return mpmath.gamma(to_mpf(x))


@dataclass(frozen=True)
class InitialDatum:
    """phi_j(x): a polynomial, prod 1/(1-x_d) (``geom``), or E_m (``em``).

    E_m(x) = prod_d sum_k a_d^k (k!)^{s_d} x_d^k / m_d(k); with ``a`` empty the
    a_d are the lower regularity constants of m_d.
    """

    kind: str = "poly"
    series: XSeries | None = None
    a: tuple = ()

    def __post_init__(self):
        if self.kind not in ("poly", "geom", "em"):
            raise ValueError(f"unknown initial-data kind {self.kind!r}")
        object.__setattr__(self, "a", tuple(rational(x) for x in self.a))

    def expand(self, dim: int, cap: int, moments: Sequence[MomentSequence], arith: Arith) -> XSeries:
        if self.kind == "poly":
            return XSeries(dim, cap, {i: arith.convert(c) for i, c in self.series.coeffs.items()})
        if self.kind == "geom":
            one = arith.convert(1)
            return XSeries(dim, cap, {idx: one for idx in multi_indices(dim, cap)})
        out = XSeries.constant(arith.convert(1), dim, cap)
        consts = self.a or tuple(m.regularity_bounds(max(cap, 1))[0] for m in moments)
        for d, (m, ad) in enumerate(zip(moments, consts)):
            factor = {}
            for k in range(cap + 1):
                idx = (0,) * d + (k,) + (0,) * (dim - d - 1)
                factor[idx] = _em_coefficient(ad, k, m, arith)
            out = out * XSeries(dim, cap, factor)
        return out

    def to_json(self) -> dict:
        if self.kind == "poly":
            return {"kind": "poly", "series": self.series.to_json()}
        if self.kind == "geom":
            return {"kind": "geom"}
        doc = {"kind": "em"}
        if self.a:
            doc["a"] = [str(x) for x in self.a]
        return doc


def _em_coefficient(ad, k: int, m: MomentSequence, arith: Arith):
    s = m.order
    if arith.exact:
        if s.denominator != 1 or not m.exact:
            raise ValueError("E_m with non-integer order needs FLOAT mode")
        return normalize(Fraction(rational(ad)) ** k * math.factorial(k) ** s.numerator / m.value(k))
    import mpmath

    return to_mpf(ad) ** k * mpmath.factorial(k) ** to_mpf(s) / to_mpf(m.value(k))


@dataclass(frozen=True)
class EquationSpec:
    N: int
    kappa: int
    moments: tuple
    terms: tuple
    initial: tuple
    inhomogeneity: Inhomogeneity = field(default_factory=Inhomogeneity)

    def __post_init__(self):
        object.__setattr__(self, "moments", tuple(self.moments))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "initial", tuple(self.initial))

    @property
    def m0(self) -> MomentSequence:
        return self.moments[0]

    @property
    def space_moments(self) -> tuple:
        return self.moments[1:]

    @property
    def s0(self) -> Fraction:
        return self.m0.order

    @property
    def s(self) -> tuple:
        """Orders s_1..s_N of the spatial moments."""
        return tuple(m.order for m in self.space_moments)

    @property
    def q_max(self) -> int:
        return max((sum(f.q) for t in self.terms for f in t.factors), default=0)

    def replace(self, **changes) -> "EquationSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    path: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.path}: {self.message}"


def errors(diags: Sequence[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.level == "error"]


def validate(spec: EquationSpec, *, nagumo: bool = False) -> list[Diagnostic]:
    """Structural checks; an empty error list means the solver can run.

    ``nagumo=True`` additionally requires s_d >= 1 for the spatial moments,
    which the Nagumo-norm and majorant analyses depend on.
    """
    out: list[Diagnostic] = []

    def err(path, msg):
        out.append(Diagnostic("error", path, msg))

    if spec.N < 1:
        err("/N", "spatial dimension must be >= 1")
    if spec.kappa < 1:
        err("/kappa", "kappa must be >= 1")
    if len(spec.moments) != spec.N + 1:
        err("/moments", f"expected {spec.N + 1} moment sequences, got {len(spec.moments)}")
    if not spec.terms:
        err("/terms", "P must have at least one term")
    for t_no, term in enumerate(spec.terms):
        base = f"/terms/{t_no}"
        if not term.factors:
            err(f"{base}/factors", "a term needs at least one factor")
        if term.v < 0:
            err(f"{base}/v", "valuation must be nonnegative")
        seen = set()
        for f_no, f in enumerate(term.factors):
            fpath = f"{base}/factors/{f_no}"
            if not 0 <= f.i < spec.kappa:
                err(f"{fpath}/i", f"time derivative order {f.i} not in [0, {spec.kappa - 1}]")
            if len(f.q) != spec.N or min(f.q, default=0) < 0:
                err(f"{fpath}/q", f"q must be {spec.N} nonnegative integers")
            if f.r < 1:
                err(f"{fpath}/r", "power r must be >= 1")
            if (f.i, f.q) in seen:
                err(fpath, f"pair (i={f.i}, q={list(f.q)}) repeated inside one term")
            seen.add((f.i, f.q))
        if term.factors and term.weighted_i - term.v >= spec.kappa:
            err(base, f"sum r_l i_l - v = {term.weighted_i - term.v} must be < kappa = {spec.kappa}")
        if not term.coeff.nonzero_at_t0():
            out.append(Diagnostic("warning", f"{base}/coeff", "coefficient vanishes identically at t = 0"))
    if len(spec.initial) != spec.kappa:
        err("/initial", f"expected {spec.kappa} initial data, got {len(spec.initial)}")
    if nagumo:
        for d, s in enumerate(spec.s, start=1):
            if s < 1:
                err(f"/moments/{d}/s", f"Nagumo-norm analysis needs s_{d} >= 1, got {s}")
    return out


# -- JSON I/O -------------------------------------------------------------------

_RAT = {"type": ["string", "integer"]}
_XSERIES = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["idx", "c"],
        "properties": {"idx": {"type": "array", "items": {"type": "integer", "minimum": 0}}, "c": _RAT},
        "additionalProperties": False,
    },
}
_TSERIES = {"type": "array", "items": _XSERIES}

SCHEMA = {
    "type": "object",
    "required": ["N", "kappa", "moments", "terms", "initial"],
    "additionalProperties": False,
    "properties": {
        "N": {"type": "integer", "minimum": 1},
        "kappa": {"type": "integer", "minimum": 1},
        "moments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["gamma", "ratio"]},
                    "s": _RAT,
                    "values": {"type": "array", "items": _RAT},
                },
                "additionalProperties": False,
                "allOf": [
                    {"if": {"properties": {"kind": {"const": "gamma"}}}, "then": {"required": ["s"]}},
                    {"if": {"properties": {"kind": {"const": "ratio"}}}, "then": {"required": ["values"]}},
                ],
            },
        },
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["factors"],
                "additionalProperties": False,
                "properties": {
                    "v": {"type": "integer", "minimum": 0},
                    "coeff": {
                        "type": "object",
                        "required": ["kind"],
                        "additionalProperties": False,
                        "properties": {
                            "kind": {"enum": ["const", "geom", "tseries"]},
                            "value": _RAT,
                            "entries": _TSERIES,
                        },
                    },
                    "factors": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["i", "q"],
                            "additionalProperties": False,
                            "properties": {
                                "i": {"type": "integer", "minimum": 0},
                                "q": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                                "r": {"type": "integer", "minimum": 1},
                            },
                        },
                    },
                },
            },
        },
        "inhomogeneity": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["zero", "tseries", "gevrey"]},
                "entries": _TSERIES,
                "sigma": _RAT,
                "C": _RAT,
                "K": _RAT,
                "profile": {"enum": ["one", "geom"]},
            },
        },
        "initial": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": ["poly", "geom", "em"]},
                    "series": _XSERIES,
                    "a": {"type": "array", "items": _RAT},
                },
                "allOf": [{"if": {"properties": {"kind": {"const": "poly"}}}, "then": {"required": ["series"]}}],
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft7Validator(SCHEMA)


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def from_dict(doc: dict) -> EquationSpec:
    error = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(doc))
    if error is not None:
        raise SpecError(_pointer(error.absolute_path), error.message)
    N = doc["N"]

    def convert(pointer, fn, *args):
        try:
            return fn(*args)
        except (ValueError, ZeroDivisionError, IndexError) as exc:
            raise SpecError(pointer, str(exc)) from exc

    moments = tuple(
        convert(f"/moments/{k}", MomentSequence.from_json, m) for k, m in enumerate(doc["moments"])
    )
    terms = []
    for t_no, t in enumerate(doc["terms"]):
        for f_no, f in enumerate(t["factors"]):
            if len(f["q"]) != N:
                raise SpecError(f"/terms/{t_no}/factors/{f_no}/q", f"expected {N} components")
        factors = [TermFactor(f["i"], tuple(f["q"]), f.get("r", 1)) for f in t["factors"]]
        c = t.get("coeff", {"kind": "const", "value": "1"})
        entries = tuple(
            convert(f"/terms/{t_no}/coeff/entries/{k}", XSeries.from_json, e, N) for k, e in enumerate(c.get("entries", []))
        )
        coeff = convert(f"/terms/{t_no}/coeff", Coefficient, c["kind"], c.get("value", 1), entries)
        terms.append(Term(tuple(factors), t.get("v", 0), coeff))
    inh = doc.get("inhomogeneity", {"kind": "zero"})
    inh_entries = tuple(
        convert(f"/inhomogeneity/entries/{k}", XSeries.from_json, e, N) for k, e in enumerate(inh.get("entries", []))
    )
    inhomogeneity = convert(
        "/inhomogeneity",
        Inhomogeneity,
        inh["kind"],
        inh_entries,
        inh.get("sigma", 0),
        inh.get("C", 1),
        inh.get("K", 1),
        inh.get("profile", "one"),
    )
    initial = []
    for k, d in enumerate(doc["initial"]):
        series = convert(f"/initial/{k}/series", XSeries.from_json, d["series"], N) if d["kind"] == "poly" else None
        initial.append(convert(f"/initial/{k}", InitialDatum, d["kind"], series, tuple(d.get("a", ()))))
    return EquationSpec(N, doc["kappa"], moments, tuple(terms), tuple(initial), inhomogeneity)


def to_dict(spec: EquationSpec) -> dict:
    return {
        "N": spec.N,
        "kappa": spec.kappa,
        "moments": [m.to_json() for m in spec.moments],
        "terms": [t.to_json() for t in spec.terms],
        "inhomogeneity": spec.inhomogeneity.to_json(),
        "initial": [d.to_json() for d in spec.initial],
    }


def load(data: bytes | str) -> EquationSpec:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SpecError("", f"invalid JSON: {exc}") from exc
    return from_dict(doc)


def save(spec: EquationSpec) -> bytes:
    return (json.dumps(to_dict(spec), indent=2, sort_keys=True) + "\n").encode()


def spec_hash(spec: EquationSpec) -> str:
    return hashlib.sha256(save(spec)).hexdigest()[:16]
