"""Modified Nagumo norms, norm-inequality checks and Gevrey-order estimation.

Norms are exact rationals whenever every ingredient is rational (integer
orders s_d, rational alpha with integer lambda(alpha), rational radius and
coefficients); otherwise they are mpmath floats and comparisons use a
relative slack of 2^-30.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from ._arith import is_exact, normalize, rational, rpow, to_mpf
from .equation import Inhomogeneity
from .moments import MomentSequence, NonRegularMomentError, gamma_envelope
from .series import TSeries, XSeries, moment_dx_multi, multi_indices, sup_majorant

__all__ = [
    "theta_coeff",
    "NagumoIndex",
    "nagumo_norm",
    "leq",
    "sup_bound_epsilon",
    "sup_bound_constant",
    "CheckResult",
    "NormReport",
    "check_norm_properties",
    "GevreyEstimate",
    "estimate_gevrey",
    "LowerBoundReport",
    "check_lower_bound",
    "check_combinatorial_lemmas",
]

SLACK = mpmath.mpf(2) ** -30


def leq(a, b) -> bool:
    """a <= b, exactly for rationals and up to a 2^-30 relative band otherwise."""
    if is_exact(a) and is_exact(b):
        return a <= b
    a, b = to_mpf(a), to_mpf(b)
    return a <= b + SLACK * max(abs(a), abs(b))


def _binom_rising(alpha: Fraction, j: int) -> Fraction:
    """binom(alpha + j - 1, j) = alpha (alpha+1) ... (alpha+j-1) / j!."""
    num, den = Fraction(1), 1
    for k in range(j):
        num *= alpha + k
        den *= k + 1
    return num / den


def theta_coeff(alpha, s, j: int, log: bool = False):
    """binom(alpha+j-1, j)^s, the j-th coefficient of Theta_{alpha,s}."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    alpha, s = rational(alpha), rational(s)
    if alpha < 0 or s <= 0:
        raise ValueError("need alpha >= 0 and s > 0")
    if alpha == 0:
        val = 1 if j == 0 else 0
        if log:
            return float("-inf") if val == 0 else 0.0
        return val
    if log:
        a = to_mpf(alpha)
        lb = mpmath.loggamma(a + j) - mpmath.loggamma(1 + j) - mpmath.loggamma(a)
        return float(to_mpf(s) * lb)
    b = _binom_rising(alpha, j)
    if s.denominator == 1:
        return normalize(b ** s.numerator)
    return mpmath.power(to_mpf(b), to_mpf(s))


class NagumoIndex:
    """Indices (alpha, r, s) of a modified Nagumo norm.

    ``alpha`` is either the zero index or has every component >= 1.  The
    orders must satisfy s_d >= 1 unless ``strict=False`` (used only to
    demonstrate that the product inequality breaks without it).
    """

    __slots__ = ("alpha", "r", "s")

    def __init__(self, alpha: Sequence, r, s: Sequence, strict: bool = True):
        alpha = tuple(rational(a) for a in alpha)
        s = tuple(rational(x) for x in s)
        r = rational(r)
        if len(alpha) != len(s):
            raise ValueError("alpha and s must have the same length")
        if not 0 < r < 1:
            raise ValueError(f"radius must lie in (0, 1), got {r}")
        if any(a != 0 for a in alpha) and min(alpha) < 1:
            raise ValueError(f"alpha must be 0 or have all components >= 1, got {[str(a) for a in alpha]}")
        if strict and min(s) < 1:
            raise ValueError(f"orders s_d must be >= 1, got {[str(x) for x in s]}")
        self.alpha, self.r, self.s = alpha, r, s

    @property
    def is_zero(self) -> bool:
        return all(a == 0 for a in self.alpha)

    @property
    def lam(self) -> Fraction:
        return sum(self.alpha, Fraction(0))

    def shifted(self, alpha: Sequence, strict: bool = False) -> "NagumoIndex":
        return NagumoIndex(alpha, self.r, self.s, strict=strict)

    def __repr__(self):
        return f"NagumoIndex(alpha={[str(a) for a in self.alpha]}, r={self.r}, s={[str(x) for x in self.s]})"


def _exact_index(idx: NagumoIndex) -> bool:
    return all(x.denominator == 1 for x in idx.s) and idx.lam.denominator == 1


def nagumo_norm(f: XSeries, idx: NagumoIndex):
    """Norm of a polynomial (or truncation); exact when all inputs are rational."""
    if f.dim != len(idx.alpha):
        raise ValueError("dimension mismatch between series and index")
    if not f.coeffs:
        return 0
    exact = _exact_index(idx) and all(is_exact(c) for c in f.coeffs.values())
    r = idx.r if exact else to_mpf(idx.r)
    if idx.is_zero:
        return sum((abs(c if exact else to_mpf(c)) * r ** sum(k) for k, c in f.coeffs.items()), 0)
    base = rpow(idx.r, idx.lam) if exact else mpmath.power(r, to_mpf(idx.lam))
    best = 0
    for k, c in f.coeffs.items():
        den = 1
        for a, s, kd in zip(idx.alpha, idx.s, k):
            den = den * theta_coeff(a, s, kd)
        if exact:
            val = abs(c) * Fraction(r) ** sum(k) / den
        else:
            val = abs(to_mpf(c)) * r ** sum(k) / to_mpf(den)
        if val > best:
            best = val
    return normalize(best * base) if exact else best * base


# -- sup bound ----------------------------------------------------------------


def sup_bound_epsilon(r, rho, s: Sequence) -> Fraction:
    """A rational epsilon with rho (1+eps)^{lambda(s)-N} < r.

    Starts from ((r/rho)^{1/(lambda(s)-N)} - 1)/2 (or (r-rho)/(2 rho) when
    lambda(s) = N) and rounds down to a small-denominator rational.
    """
    r, rho = rational(r), rational(rho)
    if not 0 < rho < r:
        raise ValueError("need 0 < rho < r")
    excess = sum((rational(x) for x in s), Fraction(0)) - len(s)
    if excess > 0:
        guess = ((float(r) / float(rho)) ** (1 / float(excess)) - 1) / 2
    else:
        guess = float(r - rho) / (2 * float(rho))
    eps = Fraction(guess).limit_denominator(10 ** 6)
    while eps <= 0 or (excess > 0 and rho * _pow_frac(1 + eps, excess) >= r):
        eps = eps / 2 if eps > 0 else Fraction(1, 10 ** 6)
    return eps


def _pow_frac(base: Fraction, exponent: Fraction):
    if exponent.denominator == 1:
        return base ** exponent.numerator
    return to_mpf(base) ** to_mpf(exponent)


def sup_bound_constant(r, rho, s: Sequence, eps=None):
    """A = (1/r) ((1+eps)/eps)^{s_hat} / (1 - rho (1+eps)^{lambda(s)-N} / r)."""
    r, rho = rational(r), rational(rho)
    eps = sup_bound_epsilon(r, rho, s) if eps is None else rational(eps)
    s = [rational(x) for x in s]
    s_hat = max(s)
    excess = sum(s, Fraction(0)) - len(s)
    growth = _pow_frac((1 + eps) / eps, s_hat)
    shrink = 1 - rho * _pow_frac(1 + eps, excess) / r
    if is_exact(growth) and is_exact(shrink):
        return normalize(Fraction(growth) / (r * shrink)), eps
    return to_mpf(growth) / (to_mpf(r) * to_mpf(shrink)), eps


# -- property suite -------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    trials: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"name": self.name, "trials": self.trials, "failures": self.failures}


@dataclass
class NormReport:
    seed: int
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_json(self) -> dict:
        return {"seed": self.seed, "ok": self.ok, "checks": [c.to_json() for c in self.checks]}


def _s(x) -> str:
    if is_exact(x):
        return str(Fraction(x))
    return mpmath.nstr(to_mpf(x), 20)


def _random_poly(rng: random.Random, dim: int, max_deg: int) -> XSeries:
    pool = list(multi_indices(dim, max_deg))
    coeffs = {}
    for _ in range(rng.randint(1, 6)):
        num = rng.choice([n for n in range(-9, 10) if n])
        coeffs[rng.choice(pool)] = Fraction(num, rng.randint(1, 5))
    return XSeries(dim, None, coeffs)


def _random_alpha(rng: random.Random, dim: int) -> tuple:
    if rng.random() < 0.2:
        return (0,) * dim
    return tuple(rng.randint(1, 4) for _ in range(dim))


def _upper_regularity(m: MomentSequence, degree: int):
    if degree < 1:
        return 1
    return m.regularity_bounds(degree)[1]


def _extremal_pair(r: Fraction, n: int = 6) -> XSeries:
    # coefficients r^-k: the truncated majorant Theta_{1,s}(x/r), same for every s
    return XSeries(1, None, {(k,): Fraction(1) / r ** k for k in range(n + 1)})


def check_norm_properties(seed: int = 0, trials: int = 200, s_override=None) -> NormReport:
    """Random-trial verification of the Nagumo-norm inequalities.

    With ``s_override`` every order is replaced by that value and the index
    checks are relaxed; an order below 1 is expected to produce failures.
    """
    names = ["product", "shift", "derivative", "sup_bound", "gevrey_norm", "convolution_identity", "norm_axioms"]
    res = {n: CheckResult(n) for n in names}
    strict = s_override is None
    for t in range(trials):
        rng = random.Random(f"{seed}:{t}")
        dim = rng.randint(1, 3)
        max_deg = {1: 6, 2: 5, 3: 4}[dim]
        s = tuple(rational(s_override) if s_override is not None else rng.choice([1, 1, 2]) for _ in range(dim))
        r = rng.choice([Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4)])
        if t == 0:
            dim, s = 1, s[:1]
            f = g = _extremal_pair(r)
            alpha = beta = (1,)
        else:
            f, g = _random_poly(rng, dim, max_deg), _random_poly(rng, dim, max_deg)
            alpha, beta = _random_alpha(rng, dim), _random_alpha(rng, dim)
        wit = {"trial": t, "dim": dim, "s": [str(x) for x in s], "r": str(r)}

        def idx(a):
            return NagumoIndex(a, r, s, strict=strict)

        # (a) product
        res["product"].trials += 1
        ab = tuple(x + y for x, y in zip(alpha, beta))
        lhs = nagumo_norm(f * g, idx(ab))
        rhs = _mul(nagumo_norm(f, idx(alpha)), nagumo_norm(g, idx(beta)))
        if not leq(lhs, rhs):
            res["product"].failures.append({**wit, "f": repr(f), "g": repr(g), "lhs": _s(lhs), "rhs": _s(rhs)})

        # (b) shift by a nonzero beta
        b1 = tuple(max(1, b) for b in beta)
        res["shift"].trials += 1
        lhs = nagumo_norm(f, idx(tuple(x + y for x, y in zip(alpha, b1))))
        rhs = _mul(rpow(r, sum(b1)), nagumo_norm(f, idx(alpha)))
        if not leq(lhs, rhs):
            res["shift"].failures.append({**wit, "f": repr(f), "lhs": _s(lhs), "rhs": _s(rhs)})

        # (c) moment derivative, alpha >= 1
        a1 = tuple(max(1, a) for a in alpha)
        q = tuple(rng.randint(0, 2) for _ in range(dim))
        moments = [MomentSequence.gamma(sd) for sd in s]
        res["derivative"].trials += 1
        factor = 1
        for d in range(dim):
            deg_d = max((k[d] for k in f.coeffs), default=0)
            A = _upper_regularity(moments[d], deg_d)
            b = _binom_rising(Fraction(a1[d]), q[d]) * math.factorial(q[d])
            factor = _mul(factor, _mul(_powq(A, q[d]), _pow_s(b, s[d])))
        df = moment_dx_multi(f, q, moments)
        lhs = nagumo_norm(df, idx(tuple(a + qd for a, qd in zip(a1, q))))
        rhs = _mul(factor, nagumo_norm(f, idx(a1)))
        if not leq(lhs, rhs):
            res["derivative"].failures.append({**wit, "q": list(q), "lhs": _s(lhs), "rhs": _s(rhs)})

        # (d) sup bound on the rho-polydisc
        rho = r * Fraction(rng.randint(1, 4), 5)
        res["sup_bound"].trials += 1
        A, eps = sup_bound_constant(r, rho, s)
        lam = sum(alpha)
        certified = _mul(_powq(A, lam), nagumo_norm(f, idx(alpha)))
        upper = sup_majorant(f, rho)
        grid = _grid_sup(f, float(rho))
        if not (leq(upper, certified) and grid <= float(upper) * (1 + 1e-12)):
            res["sup_bound"].failures.append(
                {**wit, "rho": str(rho), "eps": str(eps), "grid": grid, "upper": _s(upper), "certified": _s(certified)}
            )

        # (e) Gevrey generator: ||f_j / m0(j)||_{j alpha} <= A B^j Gamma(1 + sigma j)
        sigma = rng.choice([0, 1, 2])
        C, K = Fraction(rng.randint(1, 5), rng.randint(1, 3)), Fraction(rng.randint(1, 4), rng.randint(1, 3))
        gen = Inhomogeneity("gevrey", sigma=sigma, C=C, K=K, profile=rng.choice(["one", "geom"]))
        m0 = MomentSequence.gamma(rng.choice([1, 2]))
        from ._arith import Arith

        A_g = C / (1 - r) ** dim
        B_g = _mul(K, rpow(r, lam))
        res["gevrey_norm"].trials += 1
        for j in range(7):
            fj = gen.expand(j, dim, max_deg, m0, Arith()).scale(Fraction(1) / m0.value(j))
            lhs = nagumo_norm(fj, idx(tuple(j * a for a in alpha)))
            rhs = _mul(_mul(A_g, _powq(B_g, j)), math.factorial(sigma * j))
            if not leq(lhs, rhs):
                res["gevrey_norm"].failures.append({**wit, "j": j, "sigma": sigma, "lhs": _s(lhs), "rhs": _s(rhs)})
                break

        # (f) convolution identity with rational alpha, beta >= 0
        al = Fraction(rng.randint(0, 12), rng.randint(1, 4))
        be = Fraction(rng.randint(0, 12), rng.randint(1, 4))
        res["convolution_identity"].trials += 1
        for j in range(11):
            left = sum(_b(al, k) * _b(be, j - k) for k in range(j + 1))
            if left != _b(al + be, j):
                res["convolution_identity"].failures.append({"trial": t, "alpha": str(al), "beta": str(be), "j": j})
                break

        # norm axioms: homogeneity and triangle inequality
        c = Fraction(rng.randint(-7, 7) or 1, rng.randint(1, 4))
        res["norm_axioms"].trials += 1
        i_a = idx(alpha)
        nf, ng = nagumo_norm(f, i_a), nagumo_norm(g, i_a)
        hom = nagumo_norm(f.scale(c), i_a)
        tri = nagumo_norm(f + g, i_a)
        hom_ok = hom == abs(c) * nf if is_exact(hom) and is_exact(nf) else leq(hom, _mul(abs(c), nf)) and leq(_mul(abs(c), nf), hom)
        if not (hom_ok and leq(tri, _add(nf, ng))):
            res["norm_axioms"].failures.append({**wit, "c": str(c)})
    return NormReport(seed, [res[n] for n in names])


def _b(alpha: Fraction, j: int) -> Fraction:
    return Fraction(1) if alpha == 0 and j == 0 else (Fraction(0) if alpha == 0 else _binom_rising(alpha, j))


def _mul(a, b):
    if is_exact(a) and is_exact(b):
        return normalize(Fraction(a) * b)
    return to_mpf(a) * to_mpf(b)


def _add(a, b):
    if is_exact(a) and is_exact(b):
        return normalize(Fraction(a) + b)
    return to_mpf(a) + to_mpf(b)


def _powq(x, k):
    k = rational(k)
    if is_exact(x) and k.denominator == 1:
        return normalize(Fraction(x) ** k.numerator)
    return to_mpf(x) ** to_mpf(k)


def _pow_s(b: Fraction, s: Fraction):
    if s.denominator == 1:
        return normalize(b ** s.numerator)
    return mpmath.power(to_mpf(b), to_mpf(s))


def _grid_sup(f: XSeries, rho: float, n: int = 32) -> float:
    """max |f| over an n^N grid of the real cube [-rho, rho]^N (a lower bound of the sup)."""
    axis = np.linspace(-rho, rho, n)
    mesh = np.meshgrid(*([axis] * f.dim), indexing="ij")
    total = np.zeros_like(mesh[0])
    for k, c in f.coeffs.items():
        term = np.full_like(mesh[0], float(c))
        for xd, kd in zip(mesh, k):
            term = term * xd ** kd
        total = total + term
    return float(np.max(np.abs(total)))


# -- Gevrey estimator -------------------------------------------------------------


@dataclass
class GevreyEstimate:
    sigma_hat: float
    window: tuple
    residual: float
    rho: object
    points: list  # (j, log M_j)
    degenerate: bool = False
    raw_sigma: float = 0.0

    def to_json(self) -> dict:
        return {
            "sigma_hat": self.sigma_hat,
            "window": list(self.window),
            "residual": self.residual,
            "rho": str(self.rho),
            "degenerate": self.degenerate,
            "points": [{"j": j, "logM": lm} for j, lm in self.points],
        }


def _log_abs(x) -> float:
    if is_exact(x):
        x = Fraction(x)
        return float(mpmath.log(x.numerator) - mpmath.log(x.denominator))
    return float(mpmath.log(to_mpf(x)))


def estimate_gevrey(u: TSeries, rho, window: tuple | None = None) -> GevreyEstimate:
    """Least-squares fit of log M_j on {1, j, j log j} with M_j = sup-majorant(u_j, rho)/m0(j).

    The coefficient of j log j estimates the Gevrey order.  A window whose
    entries are all zero (terminating series) is reported as degenerate with
    sigma_hat = 0.
    """
    rho = rational(rho)
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    J = u.order
    lo, hi = window if window is not None else (J // 2, J)
    lo, hi = max(0, lo), min(J, hi)
    if lo > hi:
        raise ValueError(f"empty window [{lo}, {hi}] for J = {J}")
    # Later entries are known to lower degree; comparing majorants of
    # differently truncated polynomials would bend the fit, so cut all
    # entries of the window to the common cap first.
    caps = [u[j].cap for j in range(lo, hi + 1) if u[j].cap is not None]
    common = min(caps) if caps else None
    pts = []
    for j in range(lo, hi + 1):
        sup = sup_majorant(u[j].truncate(common), rho)
        if sup == 0:
            continue
        pts.append((j, _log_abs(sup) - u.moment0.value_log(j)))
    if not pts:
        return GevreyEstimate(0.0, (lo, hi), 0.0, rho, [], degenerate=True)
    if len(pts) < 4:
        raise ValueError(f"only {len(pts)} nonzero entries in window [{lo}, {hi}]; need at least 4")
    js = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    design = np.column_stack([np.ones_like(js), js, js * np.log(np.maximum(js, 1.0))])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - ys) ** 2)))
    raw = float(coef[2])
    return GevreyEstimate(max(raw, 0.0), (lo, hi), resid, rho, pts, raw_sigma=raw)


# -- lower bound for the sharpness counterexample ------------------------------------


@dataclass
class LowerBoundReport:
    sigma_c: Fraction
    indices: list  # n_j
    L: list  # log u_{n_j}(0) - s0 log((j v*)!) - sum_d s_d log((j q*_d)!)
    log_C: float
    log_K: float
    lemma_ok: bool
    tested: list  # one dict per sigma'

    @property
    def ok(self) -> bool:
        return self.lemma_ok and all(t["violated"] for t in self.tested) and math.isfinite(self.log_K)

    def to_json(self) -> dict:
        return {
            "sigma_c": str(self.sigma_c),
            "indices": self.indices,
            "L": self.L,
            "log_C": self.log_C,
            "log_K": self.log_K,
            "lemma_ok": self.lemma_ok,
            "tested": self.tested,
            "ok": self.ok,
        }


def check_lower_bound(ce, poly, sigmas: Sequence | None = None) -> LowerBoundReport:
    """Evidence that the counterexample is sigma'-Gevrey for no sigma' < sigma_c.

    L_j must admit an affine lower bound log C + j log K (the constants are
    reported).  For each sigma' the sequence
        D_j = log(u_{n_j}(0)/m0(n_j)) - log Gamma(1 + sigma' n_j)
    would stay below an affine function C' + K' j if the solution were
    sigma'-Gevrey; the affine function is fitted as the tightest upper
    envelope on the first half of the data, and a violation is any later j
    where D_j rises above it.
    """
    from .solver import technical_lemma_holds

    sigma_c = Fraction(poly.sigma_c)
    if sigmas is None:
        sigmas = [sigma_c - Fraction(1, 10), sigma_c / 2]
    spec = ce.spec
    s0, s = spec.s0, spec.s
    idx, vals = ce.indices, ce.values
    L = []
    for j, (n, val) in enumerate(zip(idx, vals)):
        if not val > 0:
            raise ValueError(f"u_{n}(0) = {val} is not positive; the template hypotheses fail")
        corr = float(s0) * math.lgamma(j * ce.v_star + 1)
        corr += sum(float(sd) * math.lgamma(j * qd + 1) for sd, qd in zip(s, ce.q_star))
        L.append(_log_abs(val) - corr)
    log_C = L[0]
    log_K = min(((L[j] - L[0]) / j for j in range(1, len(L))), default=0.0)
    lemma_ok = all(technical_lemma_holds(j, ce.v_star, ce.kappa_minus_i) for j in range(1, len(idx)))
    m0 = spec.m0
    tested = []
    J = len(idx) - 1
    lo, mid = max(1, J // 4), max(2, J // 2)
    for sp in sigmas:
        sp = Fraction(sp)
        D = [
            _log_abs(v) - m0.value_log(n) - float(mpmath.loggamma(1 + to_mpf(sp) * n))
            for n, v in zip(idx, vals)
        ]
        diffs = [D[j + 1] - D[j] for j in range(lo, mid)]
        K1 = max(diffs) if diffs else 0.0
        C1 = max(D[j] - K1 * j for j in range(lo, mid + 1))
        over = [j for j in range(mid + 1, J + 1) if D[j] > C1 + K1 * j]
        tested.append(
            {
                "sigma_prime": str(sp),
                "violated": bool(over),
                "first_j": over[0] if over else None,
                "envelope": {"C": C1, "K": K1, "fit": [lo, mid]},
            }
        )
    return LowerBoundReport(sigma_c, list(idx), L, log_C, log_K, lemma_ok, tested)


# -- exact combinatorial lemmas ------------------------------------------------------


def check_combinatorial_lemmas(
    j_max: int = 12,
    v_max: int = 4,
    a_max: int = 4,
    orders: Sequence = (1, Fraction(3, 2), 2, 3),
    j_env: int = 10**4,
) -> list[CheckResult]:
    """The product lemma behind the counterexample and the gamma regularity envelope.

    The first check compares prod_{k<j} prod_{l<=v} (k(v+a)+l) with (jv)! as
    integers.  The second measures min/max of m(j+1)/m(j)/(j+1)^s for
    Gamma(1+sj) over j < j_env and compares them with the analytic constants.
    """
    from .solver import technical_lemma_holds

    lemma = CheckResult("technical_lemma")
    for j in range(1, j_max + 1):
        for v in range(v_max + 1):
            for a in range(1, a_max + 1):
                lemma.trials += 1
                if not technical_lemma_holds(j, v, a):
                    lemma.failures.append({"j": j, "v": v, "a": a})
    env = CheckResult("gamma_envelope")
    for s in orders:
        env.trials += 1
        lo, hi = gamma_envelope(s)
        try:
            a, A = MomentSequence.gamma(s).regularity_bounds(j_env)
        except NonRegularMomentError as exc:
            env.failures.append({"s": _s(rational(s)), "error": str(exc)})
            continue
        if not (lo <= a and A <= hi):
            env.failures.append({"s": _s(rational(s)), "a": _s(a), "A": _s(A), "envelope": [lo, hi]})
    return [lemma, env]
