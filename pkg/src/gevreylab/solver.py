"""Coefficient recursion, majorant sequence and the sharpness counterexample.

The solution is kept in the t^j/m0(j) convention.  With that convention a
term t^v a(t,x) prod (Dt^{i_l} Dx^{q_l} u)^{r_l} contributes to u_{j+kappa}

    m0(j)/m0(j-v) * Q[j-v],

where Q is the normalized coefficient sequence of the product a * prod(...).
Q is built by repeated moment-binomial convolution,

    (F * G)[n] = sum_k  m0(n) / (m0(k) m0(n-k)) F[k] G[n-k],

one factor at a time.  Expanding the nested sums gives back the moment
multinomial sum over compositions j_0 + ... + j_R = j - v, but every partial
product is computed once, so a step costs O(j R) series products instead of
O(j^R).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from ._arith import DEFAULT_BITS, EXACT, FLOAT, Arith, is_exact, normalize, rational, to_mpf
from .analysis import NagumoIndex, leq, nagumo_norm
from .equation import Coefficient, EquationSpec, Inhomogeneity, InitialDatum, errors, spec_hash, validate
from .moments import MomentSequence
from .polygon import build
from .series import TSeries, XSeries, moment_dx_multi

__all__ = [
    "SolveError",
    "SolveRequest",
    "Solution",
    "solve",
    "MajorantRun",
    "MSReport",
    "majorant_sequence",
    "check_majorant",
    "Counterexample",
    "build_counterexample",
    "technical_lemma_products",
    "technical_lemma_holds",
]


class SolveError(ValueError):
    pass


@dataclass(frozen=True)
class SolveRequest:
    spec: EquationSpec
    J: int
    D_out: int = 0
    mode: str = EXACT
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if self.J < self.spec.kappa - 1:
            raise SolveError(f"order J = {self.J} must be >= kappa - 1 = {self.spec.kappa - 1}")
        if self.D_out < 0:
            raise SolveError("output degree must be >= 0")

    @property
    def internal_cap(self) -> int:
        steps = max(0, self.J - self.spec.kappa + 1)
        return self.D_out + steps * self.spec.q_max


@dataclass(frozen=True)
class Solution:
    u: TSeries
    degree_schedule: tuple
    spec_hash: str
    mode: str
    bits: int

    def value_at_zero(self, j: int):
        return self.u[j][(0,) * self.u.dim]

    def to_json(self) -> dict:
        return {
            "spec_hash": self.spec_hash,
            "mode": self.mode,
            "bits": self.bits if self.mode == FLOAT else None,
            "degree_schedule": list(self.degree_schedule),
            "u": self.u.to_json(),
        }


def _mode_check(spec: EquationSpec, mode: str):
    if mode == EXACT:
        inexact = [k for k, m in enumerate(spec.moments) if not m.exact]
        if inexact:
            raise SolveError(f"EXACT mode needs exact moment sequences; m_{inexact[0]} is not (use FLOAT)")


class _Term:
    """Incremental state for one term: the chain of partial products."""

    def __init__(self, term, spec: EquationSpec, cap: int, arith: Arith):
        self.term = term
        self.spec = spec
        self.cap = cap
        self.arith = arith
        self.coeff = []  # a_j, expanded lazily
        self.copies = [(f.i, f.q) for f in term.factors for _ in range(f.r)]
        self.levels: list[list[XSeries]] = [[] for _ in self.copies]

    def a(self, j: int) -> XSeries:
        while len(self.coeff) <= j:
            self.coeff.append(self.term.coeff.expand(len(self.coeff), self.spec.N, self.cap, self.arith))
        return self.coeff[j]

    def advance(self, n: int, factor, binom) -> XSeries:
        """Compute Q_k[n] for every level k and return the last one."""
        prev = self.a
        for k, (i, q) in enumerate(self.copies):
            lvl = self.levels[k]
            assert len(lvl) == n
            total = None
            cap = self.cap
            for m in range(n + 1):
                left = prev(m)
                right = factor(i, q, n - m)
                # a vanishing summand still limits how far the sum is known
                cap = min(cap, left.cap, right.cap)
                if not left or not right:
                    continue
                prod = (left * right).scale(binom(n, m))
                total = prod if total is None else total + prod
            lvl.append(XSeries.zero(self.spec.N, cap) if total is None else total.truncate(cap))
            prev = lvl.__getitem__
        return self.levels[-1][n]


def solve(req: SolveRequest) -> Solution:
    """Unique formal solution up to t-order J, correct to x-degree D_out."""
    spec = req.spec
    diags = errors(validate(spec))
    if diags:
        raise SolveError("; ".join(str(d) for d in diags))
    _mode_check(spec, req.mode)
    arith = Arith(req.mode, req.bits)
    kappa, N, m0 = spec.kappa, spec.N, spec.m0
    cap = req.internal_cap
    with arith.context():
        u: list[XSeries] = [
            spec.initial[j].expand(N, cap, spec.space_moments, arith) for j in range(min(kappa, req.J + 1))
        ]
        dcache: dict = {}

        def factor(i: int, q: tuple, n: int) -> XSeries:
            key = (i, q, n)
            hit = dcache.get(key)
            if hit is None:
                try:
                    hit = moment_dx_multi(u[n + i], q, spec.space_moments)
                except ValueError as exc:
                    raise SolveError(f"degree cap underflow differentiating u_{n + i}: {exc}") from exc
                except IndexError as exc:
                    raise SolveError(f"a spatial moment table is too short for degree {u[n + i].cap}: {exc}") from exc
                dcache[key] = hit
            return hit

        if arith.exact:
            def binom(n, k):
                return m0.binomial(n, k)

            def shift(j, v):
                return normalize(Fraction(m0.value(j)) / m0.value(j - v))
        else:
            def binom(n, k):
                return to_mpf(m0.binomial(n, k))

            def shift(j, v):
                return to_mpf(m0.value(j)) / to_mpf(m0.value(j - v))

        states = [_Term(t, spec, cap, arith) for t in spec.terms]
        for j in range(0, req.J - kappa + 1):
            total = spec.inhomogeneity.expand(j, N, cap, m0, arith)
            for st in states:
                v = st.term.v
                if j < v:
                    continue
                q_val = st.advance(j - v, factor, binom)
                total = total + (q_val.scale(shift(j, v)) if v else q_val)
            if not arith.exact:
                _check_finite(total, j + kappa)
            u.append(total)
    schedule = tuple(e.cap for e in u)
    return Solution(TSeries(m0, tuple(u)), schedule, spec_hash(spec), req.mode, req.bits)


def _check_finite(x: XSeries, j: int):
    for c in x.coeffs.values():
        if not mpmath.isfinite(c):
            raise SolveError(f"overflow in FLOAT mode at j = {j}")


# -- majorant sequence ------------------------------------------------------------


@dataclass
class MajorantRun:
    sigma: Fraction
    r: Fraction
    varsigma: Fraction
    alpha_sigma: Fraction  # every component of the multi-index alpha_sigma
    r_tilde: int
    C: object
    g: list
    alpha_coef: list  # per term: alpha_{term, j}
    v_seq: list
    empty_V: bool  # V_j empty for every 1 <= j < kappa
    exact: bool

    def to_json(self) -> dict:
        from ._arith import fmt_scalar

        return {
            "sigma": str(self.sigma),
            "r": str(self.r),
            "varsigma": str(self.varsigma),
            "alpha_sigma": str(self.alpha_sigma),
            "r_tilde": self.r_tilde,
            "C": fmt_scalar(self.C),
            "v": [fmt_scalar(x) for x in self.v_seq],
            "g": [fmt_scalar(x) for x in self.g],
            "empty_V": self.empty_V,
        }


def _majorant_setup(spec: EquationSpec, sigma: Fraction):
    s0, kappa = spec.s0, spec.kappa
    vmax = max(t.v for t in spec.terms)
    first = (1 - (sigma + s0) * (kappa + vmax)) / (sigma + s0)
    second = max(Fraction(1) / ((sigma + s0) * (kappa - t.weighted_i + t.v)) for t in spec.terms)
    varsigma = max(first, second)
    alpha_sigma = (sigma + s0) * (kappa + varsigma + vmax)
    return varsigma, alpha_sigma


def _gamma_sigma(sigma: Fraction, j: int, exact: bool):
    if sigma.denominator == 1 and exact:
        return math.factorial(sigma.numerator * j)
    return mpmath.gamma(1 + to_mpf(sigma) * j)


def _div(a, b, exact: bool):
    if exact:
        return normalize(Fraction(a) / b)
    return to_mpf(a) / to_mpf(b)


def majorant_sequence(
    spec: EquationSpec, sigma, r, J: int, C=1, cap: int | None = None
) -> MajorantRun:
    """The scalar sequence v_j dominating the normalized Nagumo norms of u_j.

    Coefficients, inhomogeneity and initial data are expanded to total
    degree ``cap`` (default: J * q_max + 8) before their norms are taken.
    """
    sigma, r = rational(sigma), rational(r)
    diags = errors(validate(spec, nagumo=True))
    if diags:
        raise SolveError("; ".join(str(d) for d in diags))
    poly = build(spec)
    if sigma < poly.sigma_c:
        raise SolveError(f"sigma = {sigma} is below the critical value {poly.sigma_c}")
    if not 0 < r < 1:
        raise SolveError("radius r must lie in (0, 1)")
    N, kappa, m0, s = spec.N, spec.kappa, spec.m0, spec.s
    exact = sigma.denominator == 1 and all(x.denominator == 1 for x in s) and all(m.exact for m in spec.moments)
    arith = Arith(EXACT if exact else FLOAT)
    if cap is None:
        cap = J * spec.q_max + 8
    varsigma, alpha_sigma = _majorant_setup(spec, sigma)
    if alpha_sigma < 1:
        raise SolveError(f"alpha_sigma = {alpha_sigma} is not Nagumo-admissible")

    def index(a):
        return NagumoIndex([a] * N, r, s)

    def norm_j(f: XSeries, j: int):
        # ||f||_{j alpha_sigma} / (m0(j) Gamma(1 + sigma j))
        return _div(nagumo_norm(f, index(j * alpha_sigma)), _mul(m0.value(j), _gamma_sigma(sigma, j, exact)), exact)

    g = []
    for j in range(max(0, J - kappa + 1)):
        fj = spec.inhomogeneity.expand(j, N, cap, m0, arith)
        den = _mul(m0.value(j + kappa), _gamma_sigma(sigma, j + kappa, exact))
        g.append(_div(nagumo_norm(fj, index((j + kappa) * alpha_sigma)), den, exact))

    alpha_coef = []
    for t in spec.terms:
        seq = []
        for j in range(J + 1):
            aj = t.coeff.expand(j, N, cap, arith)
            if not aj:
                seq.append(0)
                continue
            comps = [
                (j + kappa - t.weighted_i + t.v) * alpha_sigma - sum(f.r * f.q[d] for f in t.factors)
                for d in range(N)
            ]
            if min(comps) < 1:
                raise SolveError(f"alpha'(j={j}) = {[str(c) for c in comps]} is not Nagumo-admissible")
            nrm = nagumo_norm(aj, NagumoIndex(comps, r, s))
            seq.append(_mul(C, _div(nrm, _mul(m0.value(j), _gamma_sigma(sigma, j, exact)), exact)))
        alpha_coef.append(seq)

    r_tilde = max(t.degree for t in spec.terms)
    v: list = []
    phi0 = spec.initial[0].expand(N, cap, spec.space_moments, arith)
    v.append(_add(1, nagumo_norm(phi0, NagumoIndex([0] * N, r, s))))
    empty_V = True
    for j in range(1, min(kappa, J + 1)):
        phij = spec.initial[j].expand(N, cap, spec.space_moments, arith)
        val = norm_j(phij, j)
        for t_no, t in enumerate(spec.terms):
            n = j - kappa + t.weighted_i - t.v
            if n >= 0:
                empty_V = False
                val = _add(val, _tail_sum(alpha_coef[t_no], v, r_tilde, n, exact))
        v.append(val)
    for j in range(0, J - kappa + 1):
        val = g[j]
        for t_no, t in enumerate(spec.terms):
            n = j + t.weighted_i - t.v
            if n >= 0:
                val = _add(val, _tail_sum(alpha_coef[t_no], v, r_tilde, n, exact))
        v.append(val)
    return MajorantRun(sigma, r, varsigma, alpha_sigma, r_tilde, C, g, alpha_coef, v, empty_V and kappa > 1, exact)


def _mul(a, b):
    if is_exact(a) and is_exact(b):
        return normalize(Fraction(a) * b)
    return to_mpf(a) * to_mpf(b)


def _add(a, b):
    if is_exact(a) and is_exact(b):
        return normalize(Fraction(a) + b)
    return to_mpf(a) + to_mpf(b)


def _power_conv(v: Sequence, k: int, n: int, exact: bool) -> list:
    """Coefficients 0..n of (sum v_j X^j)^k."""
    out = [1] + [0] * n
    for _ in range(k):
        new = [0] * (n + 1)
        for a in range(n + 1):
            if out[a] == 0:
                continue
            for b in range(n + 1 - a):
                if b < len(v) and v[b] != 0:
                    new[a + b] = _add(new[a + b], _mul(out[a], v[b]))
        out = new
    return out


def _tail_sum(alpha: Sequence, v: Sequence, r_tilde: int, n: int, exact: bool):
    """sum_{j0 + j1 + ... + j_rt = n} alpha_{j0} v_{j1} ... v_{j_rt}."""
    pw = _power_conv(v, r_tilde, n, exact)
    total = 0
    for j0 in range(n + 1):
        if j0 < len(alpha) and alpha[j0] != 0 and pw[n - j0] != 0:
            total = _add(total, _mul(alpha[j0], pw[n - j0]))
    return total


@dataclass
class MSReport:
    run: MajorantRun
    lhs: list  # ||u_j||_{j alpha_sigma} / (m0(j) Gamma(1 + sigma j))
    failures: list  # indices j with lhs_j > v_j

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        from ._arith import fmt_scalar

        doc = self.run.to_json()
        doc["lhs"] = [fmt_scalar(x) for x in self.lhs]
        doc["failures"] = self.failures
        doc["ok"] = self.ok
        return doc


def check_majorant(spec: EquationSpec, sigma, r, J: int, D_out: int = 8) -> MSReport:
    """Check ||u_j||_{j alpha}/(m0(j) Gamma(1+sigma j)) <= v_j for j <= J.

    The per-term constant C replaces the non-constructive one from the
    estimates: it is the smallest C >= 1 for which the first recursive
    inequality (j = kappa) holds.  All later j are then checked with that C.
    Norms are taken on truncations to degree D_out, so the left side is a
    lower bound of the norm of the true coefficient.
    """
    sigma, r = rational(sigma), rational(r)
    probe = majorant_sequence(spec, sigma, r, J, C=1, cap=D_out + J * spec.q_max)
    mode = EXACT if probe.exact else FLOAT
    sol = solve(SolveRequest(spec, J, D_out, mode))
    N, m0, s = spec.N, spec.m0, spec.s
    lhs = []
    for j in range(J + 1):
        uj = sol.u[j].truncate(D_out)
        nrm = nagumo_norm(uj, NagumoIndex([j * probe.alpha_sigma] * N, r, s))
        lhs.append(_div(nrm, _mul(m0.value(j), _gamma_sigma(sigma, j, probe.exact)), probe.exact))
    C = _base_constant(spec, sigma, r, J, D_out, lhs, probe)
    run = probe if C == 1 else majorant_sequence(spec, sigma, r, J, C=C, cap=D_out + J * spec.q_max)
    failures = [j for j in range(J + 1) if not leq(lhs[j], run.v_seq[j])]
    return MSReport(run, lhs, failures)


def _base_constant(spec, sigma, r, J, D_out, lhs, probe):
    kappa = spec.kappa
    if J < kappa or leq(lhs[kappa], probe.v_seq[kappa]):
        return 1
    cap = D_out + J * spec.q_max
    if kappa == 1:
        # v_1 = g_0 + C * (sum of alpha terms at C = 1): affine in C
        slope = _add(probe.v_seq[1], -probe.g[0])
        if slope != 0:
            return max(1, _div(_add(lhs[1], -probe.g[0]), slope, probe.exact))
    lo, hi = 1, 2
    while not leq(lhs[kappa], majorant_sequence(spec, sigma, r, kappa, C=hi, cap=cap).v_seq[kappa]):
        lo, hi = hi, hi * 2
        if hi > 2 ** 200:
            raise SolveError("no base-case constant C found")
    for _ in range(40):
        mid = Fraction(lo + hi) / 2
        if leq(lhs[kappa], majorant_sequence(spec, sigma, r, kappa, C=mid, cap=cap).v_seq[kappa]):
            hi = mid
        else:
            lo = mid
    return hi


# -- counterexample ------------------------------------------------------------------


@dataclass
class Counterexample:
    spec: EquationSpec
    solution: Solution
    kstar: int
    v_star: int
    i_star: int
    q_star: tuple
    indices: list  # n_j = j (v* + kappa - i*) + i*
    values: list  # u_{n_j}(0)

    @property
    def kappa_minus_i(self) -> int:
        """a = kappa - i* in the technical lemma, so that v + a is the index step."""
        return self.spec.kappa - self.i_star


def build_counterexample(template: EquationSpec, J: int, D_out: int = 8, mode: str = EXACT) -> Counterexample:
    """Attach the extremal initial data to ``template`` and solve.

    phi_{i*} = E_m(x) with a_d the lower regularity constants, every other
    phi_j = prod_d 1/(1 - x_d), and f = 0.
    """
    poly = build(template)
    if poly.kstar is None:
        raise SolveError("the polygon has no positive slope (S is empty): no counterexample exists")
    for t_no, t in enumerate(template.terms):
        c = t.coeff
        if c.kind != "const" or c.value <= 0:
            raise SolveError(f"term {t_no}: coefficients must be positive constants")
    if any(x < 1 for x in template.s):
        raise SolveError("spatial moment orders must be >= 1")
    term = template.terms[poly.kstar]
    special = [f for f in term.factors if f.i != 0 or any(f.q)]
    if len(special) > 1:
        raise SolveError("kstar term must have at most one factor with (i, q) != (0, 0)")
    last = special[0] if special else term.factors[-1]
    if last.r != 1:
        raise SolveError("the distinguished factor of the kstar term must have r = 1")
    kappa = template.kappa
    i_star, q_star, v_star = last.i, last.q, term.v
    initial = tuple(
        InitialDatum("em") if j == i_star else InitialDatum("geom") for j in range(kappa)
    )
    spec = template.replace(initial=initial, inhomogeneity=Inhomogeneity())
    sol = solve(SolveRequest(spec, J, D_out, mode))
    step = v_star + kappa - i_star
    indices, values = [], []
    j = 0
    while j * step + i_star <= J:
        n = j * step + i_star
        indices.append(n)
        values.append(sol.value_at_zero(n))
        j += 1
    return Counterexample(spec, sol, poly.kstar, v_star, i_star, q_star, indices, values)


# -- technical lemma ----------------------------------------------------------------


def technical_lemma_products(j: int, v: int, a: int) -> tuple[int, int]:
    """(prod_{k<j} prod_{1<=l<=v} (k(v+a) + l),  (j v)!) as exact integers."""
    lhs = 1
    for k in range(j):
        for l in range(1, v + 1):
            lhs *= k * (v + a) + l
    return lhs, math.factorial(j * v)


def technical_lemma_holds(j: int, v: int, a: int) -> bool:
    lhs, rhs = technical_lemma_products(j, v, a)
    return lhs >= rhs
