import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from conftest import GOLDEN
from gevreylab._arith import EXACT, FLOAT
from gevreylab.eqdsl import parse
from gevreylab.equation import (
    Coefficient,
    EquationSpec,
    Inhomogeneity,
    InitialDatum,
    Term,
    TermFactor,
)
from gevreylab.moments import MomentSequence
from gevreylab.polygon import build
from gevreylab.series import XSeries, multi_indices
from gevreylab.solver import (
    SolveError,
    SolveRequest,
    build_counterexample,
    check_majorant,
    majorant_sequence,
    solve,
    technical_lemma_holds,
    technical_lemma_products,
)

from oracles import cole_hopf_at_zero, enumerate_solution, lemma_products, ptrunc, taylor_linear

F = Fraction
G1 = MomentSequence.gamma(1)


def golden(name):
    return parse((GOLDEN / f"{name}.eq").read_text())


def test_heat_polynomial_data_terminates():
    spec = parse("init 0 = x^2\nDt u - Dx^2 u = 0")
    sol = solve(SolveRequest(spec, 6, 2))
    assert sol.u[0] == XSeries(1, sol.u[0].cap, {(2,): 1})
    assert sol.u[1].coeffs == {(0,): 2}
    assert all(not sol.u[j] for j in range(2, 7))


def test_burgers_closed_form():
    # u = x / (1 - 2t) solves Dt u = Dx^2 u + 2 u Dx u; expand 1/(1 - 2t) by series inversion
    spec = parse("init 0 = x\nDt u - Dx^2 u - 2*u*Dx u = 0")
    J = 12
    inv = [F(1)]
    for n in range(1, J + 1):
        inv.append(2 * inv[n - 1])
    sol = solve(SolveRequest(spec, J, 1))
    for j in range(J + 1):
        assert sol.u[j].truncate(1).coeffs == {(1,): inv[j] * math.factorial(j)}


def test_order_below_kappa_gives_initial_data():
    spec = parse("init 0 = x\ninit 1 = 1\nrhs = gevrey(1, 1, 1)\nDt^2 u - Dx^2 u = f")
    sol = solve(SolveRequest(spec, 1, 3))
    assert sol.u.order == 1
    assert sol.u[0].coeffs == {(1,): 1} and sol.u[1].coeffs == {(0,): 1}
    with pytest.raises(SolveError):
        SolveRequest(spec, 0, 3)


def test_degree_schedule_and_float_mode():
    spec = golden("kdv")
    exact = solve(SolveRequest(spec, 10, 4))
    assert exact.degree_schedule[-1] == 4
    assert list(exact.degree_schedule) == sorted(exact.degree_schedule, reverse=True)
    approx = solve(SolveRequest(spec, 10, 4, FLOAT, 160))
    with mpmath.workprec(200):
        for j in range(11):
            for idx, c in exact.u[j].coeffs.items():
                ref = mpmath.mpf(c.numerator) / c.denominator
                assert abs(approx.u[j][idx] - ref) <= abs(ref) * mpmath.mpf(2) ** -120


def test_exact_mode_rejects_inexact_moments():
    spec = parse("moment t = gamma(3/2)\ninit 0 = x\nDt u - Dx u = 0")
    with pytest.raises(SolveError):
        solve(SolveRequest(spec, 4, 1, EXACT))
    assert solve(SolveRequest(spec, 4, 1, FLOAT)).u.order == 4


def test_solve_is_deterministic():
    spec = golden("boussinesq_1_1")
    a = solve(SolveRequest(spec, 8, 2))
    b = solve(SolveRequest(spec, 8, 2))
    assert a.u == b.u and a.to_json() == b.to_json()


# -- oracle: composition enumeration --------------------------------------------------


def oracle_inputs(spec, big):
    N = spec.N
    dense = {idx: 1 for idx in multi_indices(N, big)}
    terms = []
    for t in spec.terms:
        c = t.coeff
        if c.kind == "const":
            entries = [{(0,) * N: c.value}]
        elif c.kind == "geom":
            entries = [{k: c.value for k in dense}]
        else:
            entries = [dict(e.coeffs) for e in c.entries]
        terms.append((entries, t.v, [(f.i, f.q, f.r) for f in t.factors]))
    init = []
    for d in spec.initial:
        if d.kind == "poly":
            init.append(dict(d.series.coeffs))
        elif d.kind == "geom":
            init.append(dict(dense))
        else:
            init.append(
                {
                    k: math.prod(
                        F(a) ** kd * math.factorial(kd) ** int(m.order) / F(m.value(kd))
                        for a, kd, m in zip(d.a, k, spec.space_moments)
                    )
                    for k in dense
                }
            )
    inh = spec.inhomogeneity
    if inh.kind == "tseries":
        rhs = [dict(e.coeffs) for e in inh.entries]
    elif inh.kind == "gevrey":
        rhs = []
        for j in range(40):
            scale = inh.C * inh.K ** j * math.factorial(int(inh.sigma) * j) * spec.m0.value(j)
            rhs.append({(0,) * N: scale} if inh.profile == "one" else {k: scale for k in dense})
    else:
        rhs = None
    return terms, init, rhs


ORACLE_DOCS = {
    "burgers": "init 0 = 1 + x - x^3\nDt u - Dx^2 u - 2*u*Dx u = 0",
    "kdv": "init 0 = x^2 + 2*x^4\nDt u + Dx^3 u - 6*u*Dx u = 0",
    "boussinesq": "init 0 = x^3\ninit 1 = 1 + x\nDt^2 u - Dx^4 u - Dx^2 u - u*Dx^2 u - (Dx u)^2 = 0",
    "time_derivatives": "init 0 = x^2 - 1\ninit 1 = x\nDt^2 u - t*Dt Dx u - u*Dt u - 1/2*Dx^2 u = 0",
    "orders_2_3": "moment t = gamma(2)\nmoment x = gamma(3)\ninit 0 = 1 + x^2\nDt u - Dx u - u*Dx u = 0",
    "two_dims": (
        "coeff a = 1 + t*x1\nrhs = 1 + t^2*x2\ninit 0 = x1*x2 + x2^2\n"
        "Dt u - a*Dx1 Dx2 u - t*u^2 - Dx2 u = f"
    ),
    "ratio_moment": (
        "moment x = ratio(1; " + ", ".join(str(2 * k + 1) for k in range(24)) + ")\n"
        "init 0 = x^4 + x\nDt u - Dx^2 u - u*Dx u = 0"
    ),
    "gevrey_rhs": "rhs = gevrey(1, 2, 1/3)\ninit 0 = x\nDt u - Dx u - u^2 = f",
    "valuation": "init 0 = x^3\nDt u - t^2*Dx^2 u - t*(Dx u)^2 = 0",
}


@pytest.mark.parametrize("name", sorted(ORACLE_DOCS))
def test_recursion_matches_composition_enumeration(name):
    spec = parse(ORACLE_DOCS[name])
    J = 7
    sol = solve(SolveRequest(spec, J, 2))
    terms, init, rhs = oracle_inputs(spec, 0)
    ref = enumerate_solution(spec.kappa, terms, init, J, spec.m0, spec.space_moments, rhs)
    for j in range(J + 1):
        # polynomial inputs: the reference is exact, the solver is exact up to its cap
        assert sol.u[j].coeffs == ptrunc(ref[j], sol.u[j].cap), j


@pytest.mark.parametrize("name", ["heat_1_1_0", "boussinesq_1_1", "grmbkdv_b5", "heat_1_2_1"])
def test_recursion_with_truncated_data(name):
    spec = golden(name)
    J, D = 5, 3
    sol = solve(SolveRequest(spec, J, D))
    big = SolveRequest(spec, J, D).internal_cap + 6
    terms, init, rhs = oracle_inputs(spec, big)
    ref = enumerate_solution(spec.kappa, terms, init, J, spec.m0, spec.space_moments, rhs)
    for j in range(J + 1):
        assert sol.u[j].truncate(D).coeffs == ptrunc(ref[j], D), j


def test_em_initial_data_against_oracle():
    spec = parse("moment x = gamma(2)\ninit 0 = em(1/2)\nDt u - Dx u - u*Dx u = 0")
    sol = solve(SolveRequest(spec, 5, 2))
    big = SolveRequest(spec, 5, 2).internal_cap + 4
    terms, init, rhs = oracle_inputs(spec, big)
    ref = enumerate_solution(1, terms, init, 5, spec.m0, spec.space_moments, rhs)
    for j in range(6):
        assert sol.u[j].truncate(2).coeffs == ptrunc(ref[j], 2)


# -- oracle: classical Taylor recursion on linear specs -------------------------------


def random_linear_spec(rng: random.Random):
    N = rng.choice([1, 1, 2])
    kappa = rng.randint(1, 3)
    terms, plain = [], []
    for _ in range(rng.randint(1, 3)):
        c = F(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3))
        v, i = rng.randint(0, 2), rng.randint(0, kappa - 1)
        q = tuple(rng.randint(0, 2) for _ in range(N))
        terms.append(Term((TermFactor(i, q),), v, Coefficient.const(c)))
        plain.append((c, v, i, q))

    def poly(deg):
        return {tuple(rng.randint(0, deg) for _ in range(N)): F(rng.randint(-5, 5) or 1, rng.randint(1, 4)) for _ in range(rng.randint(1, 4))}

    init = [poly(4) for _ in range(kappa)]
    rhs_plain = [poly(3) for _ in range(rng.randint(0, 3))]
    rhs = Inhomogeneity(
        "tseries", tuple(XSeries(N, None, {k: c * math.factorial(n) for k, c in p.items()}) for n, p in enumerate(rhs_plain))
    ) if rhs_plain else Inhomogeneity()
    spec = EquationSpec(
        N,
        kappa,
        (G1,) * (N + 1),
        tuple(terms),
        tuple(InitialDatum("poly", XSeries(N, None, {k: c * math.factorial(j) for k, c in p.items()})) for j, p in enumerate(init)),
        rhs,
    )
    return spec, (kappa, plain, init, rhs_plain)


@pytest.mark.parametrize("seed", range(50))
def test_linear_specs_match_taylor_recursion(seed):
    spec, (kappa, plain, init, rhs_plain) = random_linear_spec(random.Random(seed))
    J = 8
    sol = solve(SolveRequest(spec, J, 3))
    U = taylor_linear(kappa, plain, init, J, spec.N, rhs_plain)
    for j in range(J + 1):
        want = {k: c * math.factorial(j) for k, c in U[j].items()}
        assert sol.u[j].coeffs == ptrunc(want, sol.u[j].cap), j


@given(st.integers(0, 10**6))
def test_linearity_in_the_inhomogeneity(seed):
    spec, _ = random_linear_spec(random.Random(seed))
    N = spec.N
    f1 = Inhomogeneity("tseries", (XSeries(N, None, {(1,) * N: 2}), XSeries(N, None, {(0,) * N: -1})))
    f2 = Inhomogeneity("gevrey", sigma=1, C=F(1, 2), K=3, profile="geom")
    cap = SolveRequest(spec, 6, 2).internal_cap
    f12 = Inhomogeneity(
        "tseries",
        tuple(
            f1.expand(j, N, cap, spec.m0, _exact()) + f2.expand(j, N, cap, spec.m0, _exact())
            for j in range(8)
        ),
    )

    def run(f):
        return solve(SolveRequest(spec.replace(inhomogeneity=f), 6, 2)).u

    a, b, ab, zero = run(f1), run(f2), run(f12), run(Inhomogeneity())
    for j in range(7):
        assert ab[j].truncate(2) == (a[j] + b[j] - zero[j]).truncate(2)


def _exact():
    from gevreylab._arith import Arith

    return Arith(EXACT)


# -- counterexample -------------------------------------------------------------------

# u_j(0) for the Burgers counterexample; computed by Cole-Hopf with exact rationals
COLE_HOPF_FIRST = [1, 4, 80, 3552, 271104, 31342080]


def test_cole_hopf_reference_values():
    assert cole_hopf_at_zero(5) == COLE_HOPF_FIRST


def test_counterexample_matches_cole_hopf():
    ce = build_counterexample(golden("burgers"), 40, 0)
    assert (ce.kstar, ce.v_star, ce.i_star, ce.q_star) == (0, 0, 0, (2,))
    assert ce.indices == list(range(41))
    assert ce.values == cole_hopf_at_zero(40)
    assert ce.spec.initial == (InitialDatum("em"),)


def test_short_ratio_table_is_a_solve_error():
    spec = parse("moment x = ratio(1; 1, 2, 3)\ninit 0 = x^2\nDt u - Dx u - u*Dx u = 0")
    with pytest.raises(SolveError, match="too short"):
        solve(SolveRequest(spec, 6, 1))


def test_counterexample_rejects_bad_templates():
    with pytest.raises(SolveError, match="S is empty"):
        build_counterexample(golden("heat_2_1_0"), 10)
    with pytest.raises(SolveError, match="positive constants"):
        build_counterexample(golden("kdv"), 10)


# -- majorant --------------------------------------------------------------------------


def test_majorant_sequence_heat():
    spec = parse("init 0 = geom\nDt u - Dx^2 u = 0")
    run = majorant_sequence(spec, 1, F(1, 2), 10)
    assert run.alpha_sigma >= 1 and run.v_seq[0] >= 1
    assert all(v > 0 for v in run.v_seq)
    ratios = [run.v_seq[j + 1] / run.v_seq[j] for j in range(10)]
    assert max(ratios) < 10


def test_majorant_zero_rhs_constant_data():
    spec = parse("init 0 = 3\nDt u - 2*u = 0")
    run = majorant_sequence(spec, 0, F(1, 2), 6)
    assert all(g == 0 for g in run.g)
    # a single linear term with constant coefficient: v_{j+1} = alpha_0 v_j
    a0 = run.alpha_coef[0][0]
    assert run.v_seq == [4 * a0 ** j for j in range(7)]


def test_majorant_errors():
    spec = golden("burgers")
    with pytest.raises(SolveError, match="below the critical value"):
        majorant_sequence(spec, F(1, 2), F(1, 2), 5)
    half = parse("moment x = gamma(1/2)\ninit 0 = geom\nDt u - Dx u = 0")
    with pytest.raises(SolveError, match="s_1 >= 1"):
        majorant_sequence(half, 1, F(1, 2), 5)
    with pytest.raises(SolveError, match="radius"):
        majorant_sequence(spec, 1, F(3, 2), 5)


@given(st.integers(0, 6), st.integers(0, 3))
def test_majorant_sequence_signs_random_sigma(extra, vshift):
    spec = golden("burgers")
    sigma = F(1) + F(extra, 4)
    run = majorant_sequence(spec, sigma, F(1, 3), 6)
    assert run.alpha_sigma >= 1 and run.v_seq[0] >= 1 and all(v >= 0 for v in run.v_seq)


@pytest.mark.parametrize("name", ["heat_1_1_0", "burgers", "kdv"])
def test_majorant_dominates(name):
    spec = golden(name)
    rep = check_majorant(spec, build(spec).sigma_c, F(1, 2), 12)
    assert rep.ok, rep.failures


# -- technical lemma ----------------------------------------------------------------


def test_technical_lemma_grid():
    for j in range(1, 13):
        for v in range(5):
            for a in range(1, 5):
                assert technical_lemma_products(j, v, a) == lemma_products(j, v, a)
                assert technical_lemma_holds(j, v, a)
