"""A small text format for equations, parsed by recursive descent.

Example::

    # regular moment Burgers equation
    moment t = gamma(1)
    moment x = gamma(1)
    init 0 = geom
    Dt u - Dx^2 u - 2*u*Dx u = 0

Headers (one per line, any order, before or after the equation):

    moment t = gamma(s)            time moment m_0
    moment x = gamma(s)            spatial moment (N = 1); x1, x2, ... for N > 1
    moment x1 = ratio(s; r0, r1, ...)
    init j = geom | em | em(a_1, ..., a_N) | <polynomial in x>
    rhs = gevrey(sigma, C, K[, geom]) | <polynomial in t, x>
    coeff a = geom(c) | <polynomial in t, x>

The equation reads ``Dt^kappa u - P = 0`` (or ``= f`` when a ``rhs`` header
is present).  Each summand of P is a ``*``-product of numbers, ``t^v``, at
most one named coefficient and factors ``D... u`` or ``D... u^r``; the power
binds the whole factor, so ``Dx u^2`` means ``(Dx u)^2``.  Polynomials in t
are ordinary Taylor polynomials; they are converted to the t^j/m0(j)
convention on input.  Undeclared moments default to gamma(1).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from ._arith import normalize
from .equation import (
    Coefficient,
    EquationSpec,
    Inhomogeneity,
    InitialDatum,
    Term,
    TermFactor,
)
from .moments import MomentSequence
from .series import XSeries

__all__ = ["DslError", "parse", "print_spec"]


class DslError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {message}")


@dataclass(frozen=True)
class Tok:
    kind: str  # num, id, op, end
    text: str
    line: int
    col: int


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str, line_no: int) -> list[Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        col = m.start(m.lastindex) + 1
        if m.group(1):
            toks.append(Tok("num", m.group(1), line_no, col))
        elif m.group(2):
            toks.append(Tok("id", m.group(2), line_no, col))
        else:
            ch = m.group(3)
            if ch not in "^*+-=()/,;":
                raise DslError(f"unexpected character {ch!r}", line_no, col)
            toks.append(Tok("op", ch, line_no, col))
        pos = m.end()
    toks.append(Tok("end", "", line_no, len(text) + 1))
    return toks


class _Cursor:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.i]
        self.i = min(self.i + 1, len(self.toks) - 1)
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "id")

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of line'!r}")
        return self.next()

    def fail(self, msg: str, tok: Tok | None = None):
        t = tok or self.tok
        raise DslError(msg, t.line, t.col)

    def integer(self) -> int:
        if self.tok.kind != "num":
            self.fail(f"expected an integer, found {self.tok.text or 'end of line'!r}")
        return int(self.next().text)

    def rational(self) -> Fraction:
        sign = -1 if self.at("-") else 1
        if self.at("-"):
            self.next()
        num = self.integer()
        if self.at("/") and self.peek().kind == "num":
            self.next()
            den = self.integer()
            if den == 0:
                self.fail("zero denominator")
            return sign * Fraction(num, den)
        return Fraction(sign * num)

    def done(self):
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}")


_AXIS = re.compile(r"^x(\d*)$")
_DX = re.compile(r"^Dx(\d*)$")


def _axis(name: str, tok: Tok, pattern=_AXIS) -> int:
    """0-based axis for x / x1 / Dx / Dx2 ...; -1 stands for the bare name."""
    m = pattern.match(name)
    if not m:
        raise DslError(f"unknown name {name!r}", tok.line, tok.col)
    if not m.group(1):
        return -1
    k = int(m.group(1))
    if k < 1:
        raise DslError("axes are numbered from 1", tok.line, tok.col)
    return k - 1


# -- polynomials in t and x --------------------------------------------------------


def _poly(cur: _Cursor, allow_t: bool) -> dict:
    """Polynomial with rational coefficients: {(t_power, ((axis, power), ...)): coeff}."""
    out: dict = {}
    sign = 1
    if cur.at("-"):
        cur.next()
        sign = -1
    elif cur.at("+"):
        cur.next()
    while True:
        coeff, key = _mono(cur, allow_t)
        out[key] = out.get(key, 0) + sign * coeff
        if cur.at("+") or cur.at("-"):
            sign = 1 if cur.next().text == "+" else -1
            continue
        return out


def _mono(cur: _Cursor, allow_t: bool):
    coeff = Fraction(1)
    tpow = 0
    xs: dict[int, int] = {}
    seen = False
    while True:
        tok = cur.tok
        if tok.kind == "num":
            coeff *= cur.rational()
        elif tok.kind == "id" and (tok.text == "t" or _AXIS.match(tok.text)):
            cur.next()
            p = 1
            if cur.at("^"):
                cur.next()
                p = cur.integer()
            if tok.text == "t":
                if not allow_t:
                    cur.fail("t is not allowed here", tok)
                tpow += p
            else:
                ax = _axis(tok.text, tok)
                xs[ax] = xs.get(ax, 0) + p
        elif tok.kind == "op" and tok.text == "(":
            cur.fail("parentheses are not supported in polynomials")
        else:
            if not seen:
                cur.fail(f"expected a number or variable, found {tok.text or 'end of line'!r}")
            return coeff, (tpow, tuple(sorted(xs.items())))
        seen = True
        if cur.at("*"):
            cur.next()
            continue
        if cur.tok.kind in ("num", "id"):
            continue
        return coeff, (tpow, tuple(sorted(xs.items())))


# -- equation ------------------------------------------------------------------------


@dataclass
class _Factor:
    i: int
    q: dict  # axis (-1 for bare Dx) -> order
    r: int
    tok: Tok


@dataclass
class _PTerm:
    const: Fraction
    v: int
    coeff_name: str | None
    factors: list
    tok: Tok


def _dops(cur: _Cursor):
    """dop* 'u' ['^' r]; returns (i, q, r) or None when no factor starts here."""
    i, q = 0, {}
    start = cur.tok
    while cur.tok.kind == "id" and (cur.tok.text == "Dt" or _DX.match(cur.tok.text)):
        tok = cur.next()
        p = 1
        if cur.at("^"):
            cur.next()
            p = cur.integer()
        if tok.text == "Dt":
            i += p
        else:
            ax = _axis(tok.text, tok, _DX)
            q[ax] = q.get(ax, 0) + p
    if not cur.at("u"):
        if start is not cur.tok:
            cur.fail("a differential operator must be applied to u")
        return None
    cur.next()
    r = 1
    if cur.at("^"):
        cur.next()
        r = cur.integer()
        if r < 1:
            cur.fail("power must be >= 1")
    return i, q, r


def _factor(cur: _Cursor):
    tok = cur.tok
    if cur.at("("):
        cur.next()
        inner = _dops(cur)
        if inner is None:
            cur.fail("expected a factor inside parentheses")
        i, q, r = inner
        cur.expect(")")
        if cur.at("^"):
            cur.next()
            r *= cur.integer()
        return _Factor(i, q, r, tok)
    got = _dops(cur)
    if got is None:
        return None
    return _Factor(*got, tok)


def _pterm(cur: _Cursor) -> _PTerm:
    start = cur.tok
    term = _PTerm(Fraction(1), 0, None, [], start)
    while True:
        tok = cur.tok
        f = _factor(cur)
        if f is not None:
            term.factors.append(f)
        elif tok.kind == "num":
            term.const *= cur.rational()
        elif tok.kind == "id" and tok.text == "t":
            cur.next()
            p = 1
            if cur.at("^"):
                cur.next()
                p = cur.integer()
            term.v += p
        elif tok.kind == "id":
            if term.coeff_name is not None:
                cur.fail("at most one named coefficient per term")
            term.coeff_name = cur.next().text
        else:
            cur.fail(f"expected a term, found {tok.text or 'end of line'!r}")
        if cur.at("*"):
            cur.next()
            continue
        break
    if not term.factors:
        cur.fail("a term of P needs at least one factor of u", start)
    return term


def _equation(cur: _Cursor):
    lead = cur.tok
    got = _factor(cur)
    if got is None or got.q or got.r != 1 or got.i < 1:
        cur.fail("the equation must start with Dt^kappa u", lead)
    kappa = got.i
    terms = []
    while cur.at("+") or cur.at("-"):
        sign = 1 if cur.next().text == "+" else -1
        t = _pterm(cur)
        t.const *= -sign  # the equation is Dt^kappa u - P = f
        terms.append(t)
    cur.expect("=")
    rhs = cur.tok
    if rhs.kind == "num" and rhs.text == "0":
        cur.next()
        has_f = False
    elif rhs.kind == "id" and rhs.text == "f":
        cur.next()
        has_f = True
    else:
        cur.fail("the right-hand side must be 0 or f")
    cur.done()
    return kappa, terms, has_f, rhs


# -- document ------------------------------------------------------------------------


def _moment(cur: _Cursor) -> MomentSequence:
    tok = cur.tok
    kind = cur.next().text
    cur.expect("(")
    if kind == "gamma":
        s = cur.rational()
        cur.expect(")")
        if s <= 0:
            cur.fail("moment order must be positive", tok)
        return MomentSequence.gamma(s)
    if kind == "ratio":
        s = cur.rational()
        cur.expect(";")
        vals = [cur.rational()]
        while cur.at(","):
            cur.next()
            vals.append(cur.rational())
        cur.expect(")")
        try:
            return MomentSequence.from_ratios(vals, s)
        except ValueError as exc:
            raise DslError(str(exc), tok.line, tok.col) from exc
    raise DslError(f"unknown moment kind {kind!r}", tok.line, tok.col)


def _lines(text: str) -> Iterator[tuple[int, str]]:
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if line.strip():
            yield no, line


def parse(text: str, default_init: str | None = None) -> EquationSpec:
    """Parse a DSL document.

    Missing initial data is an error unless ``default_init`` names a
    generator ("geom" or "em") to use for every undeclared phi_j.
    """
    moments: dict = {}
    inits: dict = {}
    coeffs: dict = {}
    rhs_decl = None
    equation = None
    for no, line in _lines(text):
        cur = _Cursor(_tokenize(line, no))
        head = cur.tok
        nxt = cur.peek()
        if head.text == "moment" and nxt.kind == "id":
            cur.next()
            name_tok = cur.next()
            if name_tok.text != "t":
                _axis(name_tok.text, name_tok)
            cur.expect("=")
            if name_tok.text in moments:
                cur.fail(f"moment {name_tok.text} declared twice", name_tok)
            moments[name_tok.text] = (_moment(cur), name_tok)
            cur.done()
        elif head.text == "init" and nxt.kind == "num":
            cur.next()
            j_tok = cur.tok
            j = cur.integer()
            cur.expect("=")
            if j in inits:
                cur.fail(f"initial datum {j} declared twice", j_tok)
            inits[j] = (_init(cur), j_tok)
            cur.done()
        elif head.text == "rhs" and nxt.text == "=":
            cur.next()
            cur.next()
            rhs_decl = (_rhs(cur), head)
            cur.done()
        elif head.text == "coeff" and nxt.kind == "id":
            cur.next()
            name_tok = cur.next()
            cur.expect("=")
            coeffs[name_tok.text] = (_coeff_decl(cur), name_tok)
            cur.done()
        else:
            if equation is not None:
                cur.fail("only one equation per document")
            equation = _equation(cur)
    if equation is None:
        raise DslError("no equation found", max(1, len(text.splitlines())), 1)
    kappa, pterms, has_f, rhs_tok = equation

    # dimension: largest axis mentioned anywhere
    axes = [-1]
    for t in pterms:
        for f in t.factors:
            axes.extend(f.q)
    for name, (_, tok) in moments.items():
        if name != "t":
            axes.append(_axis(name, tok))
    for init, _ in inits.values():
        if init[0] == "poly":
            axes.extend(ax for key in init[1] for ax, _ in key[1])
        if init[0] == "em" and init[1]:
            axes.append(len(init[1]) - 1)
    for decl, _ in coeffs.values():
        if decl[0] == "poly":
            axes.extend(ax for key in decl[1] for ax, _ in key[1])
    if rhs_decl and rhs_decl[0][0] == "poly":
        axes.extend(ax for key in rhs_decl[0][1] for ax, _ in key[1])
    N = max(max(axes) + 1, 1)
    bare_used = -1 in axes[1:]
    if bare_used and N > 1:
        raise DslError("bare Dx / x is only allowed when N = 1; use Dx1, x1, ...", rhs_tok.line, 1)

    def axis_of(ax):
        return 0 if ax == -1 else ax

    m0 = moments.get("t", (MomentSequence.gamma(1), None))[0]
    space = []
    for d in range(N):
        names = ["x", f"x{d + 1}"] if N == 1 else [f"x{d + 1}"]
        found = [moments[n][0] for n in names if n in moments]
        space.append(found[0] if found else MomentSequence.gamma(1))

    def to_x(key_xs) -> tuple:
        idx = [0] * N
        for ax, p in key_xs:
            idx[axis_of(ax)] += p
        return tuple(idx)

    def tseries(poly: dict) -> tuple:
        """Ordinary t-polynomial -> entries in the t^j/m0(j) convention."""
        by_j: dict = {}
        for (tp, xs), c in poly.items():
            if c == 0:
                continue
            by_j.setdefault(tp, {})
            idx = to_x(xs)
            by_j[tp][idx] = by_j[tp].get(idx, 0) + c
        if not by_j:
            return ()
        out = []
        for j in range(max(by_j) + 1):
            scale = m0.value(j)
            out.append(XSeries(N, None, {i: normalize(c * scale) for i, c in by_j.get(j, {}).items()}))
        return tuple(out)

    named = {}
    for name, (decl, tok) in coeffs.items():
        if decl[0] == "geom":
            named[name] = Coefficient("geom", decl[1])
        else:
            named[name] = Coefficient("tseries", 1, tseries(decl[1]))

    terms = []
    for t in pterms:
        merged: dict = {}
        for f in t.factors:
            if f.i >= kappa:
                raise DslError(f"Dt^{f.i} inside P must have order < kappa = {kappa}", f.tok.line, f.tok.col)
            q = [0] * N
            for ax, p in f.q.items():
                q[axis_of(ax)] += p
            key = (f.i, tuple(q))
            merged[key] = merged.get(key, 0) + f.r
        factors = tuple(TermFactor(i, q, r) for (i, q), r in sorted(merged.items()))
        if t.coeff_name is None:
            coeff = Coefficient.const(t.const)
        else:
            if t.coeff_name not in named:
                raise DslError(f"unknown coefficient {t.coeff_name!r}", t.tok.line, t.tok.col)
            base = named[t.coeff_name]
            if base.kind == "geom":
                coeff = Coefficient("geom", base.value * t.const)
            else:
                coeff = Coefficient("tseries", 1, tuple(e.scale(t.const) for e in base.entries))
        terms.append(Term(factors, t.v, coeff))

    initial = []
    for j in range(kappa):
        if j not in inits:
            if default_init is None:
                raise DslError(f"missing initial datum 'init {j} = ...'", rhs_tok.line, 1)
            initial.append(InitialDatum(default_init))
            continue
        (kind, payload), _ = inits[j]
        if kind == "poly":
            series = XSeries(N, None, {to_x(xs): c for (_, xs), c in payload.items() if c != 0})
            initial.append(InitialDatum("poly", series))
        elif kind == "em":
            if payload and len(payload) != N:
                raise DslError(f"em needs {N} constants", inits[j][1].line, inits[j][1].col)
            initial.append(InitialDatum("em", None, payload))
        else:
            initial.append(InitialDatum("geom"))
    for j, (_, tok) in inits.items():
        if j >= kappa:
            raise DslError(f"init {j} exceeds kappa - 1 = {kappa - 1}", tok.line, tok.col)

    inhom = Inhomogeneity()
    if has_f and rhs_decl is None:
        raise DslError("equation has right-hand side f but no 'rhs = ...' header", rhs_tok.line, rhs_tok.col)
    if rhs_decl is not None:
        (kind, payload), tok = rhs_decl
        if not has_f:
            raise DslError("'rhs' header given but the equation ends with '= 0'", tok.line, tok.col)
        if kind == "gevrey":
            sigma, C, K, profile = payload
            inhom = Inhomogeneity("gevrey", sigma=sigma, C=C, K=K, profile=profile)
        elif kind == "zero":
            inhom = Inhomogeneity()
        else:
            entries = tseries(payload)
            inhom = Inhomogeneity("tseries", entries) if entries else Inhomogeneity()
    return EquationSpec(N, kappa, (m0, *space), tuple(terms), tuple(initial), inhom)


def _init(cur: _Cursor):
    if cur.at("geom"):
        cur.next()
        return ("geom", None)
    if cur.at("em"):
        cur.next()
        consts = ()
        if cur.at("("):
            cur.next()
            vals = [cur.rational()]
            while cur.at(","):
                cur.next()
                vals.append(cur.rational())
            cur.expect(")")
            consts = tuple(vals)
        return ("em", consts)
    return ("poly", _poly(cur, allow_t=False))


def _rhs(cur: _Cursor):
    if cur.tok.kind == "num" and cur.tok.text == "0" and cur.peek().kind == "end":
        cur.next()
        return ("zero", None)
    if cur.at("gevrey"):
        cur.next()
        cur.expect("(")
        sigma = cur.rational()
        cur.expect(",")
        C = cur.rational()
        cur.expect(",")
        K = cur.rational()
        profile = "one"
        if cur.at(","):
            cur.next()
            tok = cur.next()
            if tok.text not in ("one", "geom"):
                cur.fail("profile must be 'one' or 'geom'", tok)
            profile = tok.text
        cur.expect(")")
        return ("gevrey", (sigma, C, K, profile))
    return ("poly", _poly(cur, allow_t=True))


def _coeff_decl(cur: _Cursor):
    if cur.at("geom"):
        cur.next()
        value = Fraction(1)
        if cur.at("("):
            cur.next()
            value = cur.rational()
            cur.expect(")")
        return ("geom", value)
    return ("poly", _poly(cur, allow_t=True))


# -- printer -------------------------------------------------------------------------


def _xname(d: int, N: int) -> str:
    return "x" if N == 1 else f"x{d + 1}"


def _monomial(c: Fraction, tpow: int, idx: tuple, N: int) -> str:
    parts = []
    if tpow:
        parts.append("t" if tpow == 1 else f"t^{tpow}")
    for d, k in enumerate(idx):
        if k:
            name = _xname(d, N)
            parts.append(name if k == 1 else f"{name}^{k}")
    body = "*".join(parts)
    mag = abs(c)
    if not body:
        return str(mag)
    return body if mag == 1 else f"{mag}*{body}"


def _poly_text(items: list, N: int) -> str:
    """items: (coeff, tpow, idx) in print order."""
    if not items:
        return "0"
    out = []
    for k, (c, tp, idx) in enumerate(items):
        mono = _monomial(Fraction(c), tp, idx, N)
        if k == 0:
            out.append(mono if c > 0 else f"-{mono}")
        else:
            out.append(f"{'+' if c > 0 else '-'} {mono}")
    return " ".join(out)


def _tpoly_items(entries, m0: MomentSequence, N: int) -> list:
    if not m0.exact:
        raise ValueError("t-dependent data can only be printed for exact m0")
    items = []
    for j, e in enumerate(entries):
        for idx, c in sorted(e.coeffs.items()):
            items.append((normalize(Fraction(c) / m0.value(j)), j, idx))
    return items


def _moment_text(m: MomentSequence) -> str:
    if m.kind == "gamma":
        return f"gamma({m.order})"
    doc = m.to_json()
    return f"ratio({m.order}; {', '.join(doc['values'])})"


def _factor_text(f: TermFactor, N: int) -> str:
    ops = []
    if f.i:
        ops.append("Dt" if f.i == 1 else f"Dt^{f.i}")
    for d, k in enumerate(f.q):
        if k:
            name = "Dx" if N == 1 else f"Dx{d + 1}"
            ops.append(name if k == 1 else f"{name}^{k}")
    if not ops:
        return "u" if f.r == 1 else f"u^{f.r}"
    body = " ".join(ops) + " u"
    return body if f.r == 1 else f"({body})^{f.r}"


def print_spec(spec: EquationSpec) -> str:
    """Canonical DSL text; ``parse(print_spec(s)) == s`` for DSL-expressible specs."""
    N = spec.N
    lines = [f"moment t = {_moment_text(spec.m0)}"]
    for d, m in enumerate(spec.space_moments):
        lines.append(f"moment {_xname(d, N)} = {_moment_text(m)}")
    names = {}
    for t_no, t in enumerate(spec.terms):
        c = t.coeff
        if c.kind == "const":
            continue
        name = f"a{t_no + 1}"
        names[t_no] = name
        if c.kind == "geom":
            lines.append(f"coeff {name} = geom({c.value})")
        else:
            lines.append(f"coeff {name} = {_poly_text(_tpoly_items(c.entries, spec.m0, N), N)}")
    for j, d in enumerate(spec.initial):
        if d.kind == "geom":
            text = "geom"
        elif d.kind == "em":
            text = "em" if not d.a else f"em({', '.join(str(a) for a in d.a)})"
        else:
            text = _poly_text([(c, 0, idx) for idx, c in sorted(d.series.coeffs.items())], N)
        lines.append(f"init {j} = {text}")
    inh = spec.inhomogeneity
    has_f = inh.kind != "zero"
    if inh.kind == "gevrey":
        lines.append(f"rhs = gevrey({inh.sigma}, {inh.C}, {inh.K}, {inh.profile})")
    elif inh.kind == "tseries":
        lines.append(f"rhs = {_poly_text(_tpoly_items(inh.entries, spec.m0, N), N)}")
    eq = "Dt u" if spec.kappa == 1 else f"Dt^{spec.kappa} u"
    for t_no, t in enumerate(spec.terms):
        parts = []
        c = t.coeff
        if c.kind == "const":
            sign = "-" if c.value > 0 else "+"
            if abs(c.value) != 1:
                parts.append(str(abs(c.value)))
        else:
            sign = "-"
            parts.append(names[t_no])
        if t.v:
            parts.append("t" if t.v == 1 else f"t^{t.v}")
        parts.extend(_factor_text(f, N) for f in t.factors)
        eq += f" {sign} " + "*".join(parts)
    eq += " = f" if has_f else " = 0"
    lines.append(eq)
    return "\n".join(lines) + "\n"
