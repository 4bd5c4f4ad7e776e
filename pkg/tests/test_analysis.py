import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from conftest import GOLDEN
from gevreylab.analysis import (
    NagumoIndex,
    check_combinatorial_lemmas,
    check_lower_bound,
    check_norm_properties,
    estimate_gevrey,
    nagumo_norm,
    sup_bound_constant,
    sup_bound_epsilon,
    theta_coeff,
)
from gevreylab.eqdsl import parse
from gevreylab.polygon import build
from gevreylab.series import TSeries, XSeries
from gevreylab.solver import SolveRequest, build_counterexample, solve

F = Fraction
HALF = F(1, 2)


def mpq(x) -> mpmath.mpf:
    x = F(x)
    return mpmath.mpf(x.numerator) / x.denominator


def golden(name):
    return parse((GOLDEN / f"{name}.eq").read_text())


# -- Theta coefficients and norms -------------------------------------------------------


def test_theta_examples():
    assert theta_coeff(0, 1, 0) == 1
    assert all(theta_coeff(0, s, j) == 0 for s in (1, 2) for j in range(1, 6))
    assert theta_coeff(1, 1, 5) == 1
    # binom(4, 3)^2
    assert theta_coeff(2, 2, 3) == 16


@pytest.mark.parametrize("alpha", [F(1), F(3, 2), F(2), F(7, 3), F(4)])
def test_theta_series_sums_to_binomial_power(alpha):
    x = F(1, 3)
    with mpmath.workprec(120):
        partial = sum(mpq(theta_coeff(alpha, 1, j) * x ** j) for j in range(260))
        exact = (1 - mpq(x)) ** (-mpq(alpha))
        assert abs(partial / exact - 1) <= mpmath.mpf(2) ** -40


def test_theta_log_matches_value():
    for alpha, s, j in [(F(3, 2), F(2), 9), (F(2), F(1), 30), (F(5), F(3), 12)]:
        val = theta_coeff(alpha, s, j)
        assert theta_coeff(alpha, s, j, log=True) == pytest.approx(float(mpmath.log(mpq(val))), rel=1e-12)


def test_norm_examples():
    r = F(1, 3)
    assert nagumo_norm(XSeries.constant(F(-5, 2), 1), NagumoIndex([0], r, [1])) == F(5, 2)
    assert nagumo_norm(XSeries.monomial((1,), 1), NagumoIndex([1], r, [1])) == r ** 2
    assert nagumo_norm(XSeries.zero(2), NagumoIndex([1, 1], r, [1, 2])) == 0


def test_product_equality_for_constants():
    r = F(2, 5)
    one = XSeries.constant(1, 1)
    idx = NagumoIndex([1], r, [1])
    assert nagumo_norm(one * one, NagumoIndex([2], r, [1])) == r ** 2 == nagumo_norm(one, idx) ** 2


def test_index_admissibility():
    with pytest.raises(ValueError):
        NagumoIndex([F(1, 2)], HALF, [1])
    with pytest.raises(ValueError):
        NagumoIndex([1], HALF, [F(1, 2)])
    with pytest.raises(ValueError):
        NagumoIndex([1], F(1), [1])
    NagumoIndex([1], HALF, [F(1, 2)], strict=False)


polys = st.dictionaries(
    st.tuples(st.integers(0, 5), st.integers(0, 5)),
    st.fractions(min_value=-9, max_value=9, max_denominator=7),
    max_size=6,
).map(lambda d: XSeries(2, None, d))
indices = st.builds(
    lambda a, b, r, s: NagumoIndex([a, b] if a and b else [0, 0], r, s),
    st.integers(0, 4),
    st.integers(0, 4),
    st.sampled_from([F(1, 4), F(1, 2), F(2, 3)]),
    st.sampled_from([(1, 1), (1, 2), (3, 2)]),
)


@given(polys, polys, indices, st.fractions(min_value=-5, max_value=5, max_denominator=4))
def test_norm_axioms(f, g, idx, c):
    assert nagumo_norm(f.scale(c), idx) == abs(c) * nagumo_norm(f, idx)
    assert nagumo_norm(f + g, idx) <= nagumo_norm(f, idx) + nagumo_norm(g, idx)
    assert (nagumo_norm(f, idx) == 0) == (not f)


def test_sup_bound_epsilon_choice():
    eps = sup_bound_epsilon(HALF, F(1, 4), [2, 1])
    # lambda(s) - N = 1: the starting point is (r/rho - 1)/2 = 1/2
    assert eps == HALF
    eps = sup_bound_epsilon(HALF, F(1, 4), [1, 1])
    assert eps == F(1, 2)  # (r - rho)/(2 rho)
    eps = sup_bound_epsilon(F(3, 5), F(1, 2), [3, 3])
    assert F(1, 2) * (1 + eps) ** 4 < F(3, 5)
    A, eps = sup_bound_constant(HALF, F(1, 4), [1])
    assert A == 2 * 3 / (1 - F(1, 2)) and eps == HALF


def test_convolution_identity_alpha_beta_one():
    from gevreylab.analysis import _b

    for j in range(12):
        assert sum(_b(F(1), k) * _b(F(1), j - k) for k in range(j + 1)) == j + 1 == _b(F(2), j)


def test_property_suite_passes_and_is_reproducible():
    rep = check_norm_properties(seed=0, trials=200)
    assert rep.ok, [c.to_json() for c in rep.checks if not c.ok]
    assert [c.trials for c in rep.checks] == [200] * 7
    assert check_norm_properties(seed=0, trials=25).to_json() == check_norm_properties(seed=0, trials=25).to_json()


def test_property_suite_other_seed():
    assert check_norm_properties(seed=12345, trials=60).ok


def test_orders_below_one_break_the_product_inequality():
    rep = check_norm_properties(seed=0, trials=30, s_override=HALF)
    product = next(c for c in rep.checks if c.name == "product")
    assert not rep.ok and product.failures
    assert product.failures[0]["trial"] == 0


# -- Gevrey estimator ---------------------------------------------------------------


def heat_solution(J=40, data="geom", D=0):
    spec = parse(f"init 0 = {data}\nDt u - Dx^2 u = 0")
    return solve(SolveRequest(spec, J, D)).u


def test_heat_benchmark_estimate():
    est = estimate_gevrey(heat_solution(), HALF, (20, 40))
    assert 0.9 <= est.sigma_hat <= 1.1
    assert not est.degenerate


def test_terminating_series_is_degenerate():
    est = estimate_gevrey(heat_solution(data="x^2", D=2), HALF, (20, 40))
    assert est.degenerate and est.sigma_hat == 0


def test_estimate_scale_invariant():
    u = heat_solution()
    a = estimate_gevrey(u, HALF, (20, 40))
    b = estimate_gevrey(u.scale(F(10 ** 7, 3)), HALF, (20, 40))
    assert abs(a.sigma_hat - b.sigma_hat) < 1e-9


def test_estimate_stable_under_moment_dt():
    u = heat_solution(41)
    a = estimate_gevrey(u, HALF, (20, 40)).sigma_hat
    b = estimate_gevrey(u.moment_dt(1), HALF, (20, 40)).sigma_hat
    assert abs(a - b) <= 0.1


def test_estimator_input_errors():
    u = heat_solution(10)
    with pytest.raises(ValueError):
        estimate_gevrey(u, F(3, 2))
    with pytest.raises(ValueError):
        estimate_gevrey(u, HALF, (8, 9))
    with pytest.raises(ValueError):
        estimate_gevrey(u, HALF, (9, 3))


def test_convergent_geometric_growth_estimates_zero():
    # u_j = 3^j j!: convergent in the t^j/j! convention
    m0 = heat_solution(2).moment0
    u = TSeries(m0, tuple(XSeries.constant(3 ** j * math.factorial(j), 1) for j in range(41)))
    assert estimate_gevrey(u, HALF, (20, 40)).sigma_hat < 0.05


# -- counterexample lower bound -------------------------------------------------------


def test_lower_bound_on_burgers_template():
    template = golden("burgers")
    ce = build_counterexample(template, 40, 0)
    poly = build(template)
    rep = check_lower_bound(ce, poly)
    assert rep.ok and rep.lemma_ok and math.isfinite(rep.log_K)
    assert [t["sigma_prime"] for t in rep.tested] == ["9/10", "1/2"]
    assert all(t["violated"] and t["first_j"] <= 40 for t in rep.tested)
    # L_j stays above its affine lower bound
    assert all(L >= rep.log_C + j * rep.log_K - 1e-9 for j, L in enumerate(rep.L))


def test_lower_bound_at_sigma_c_is_not_required():
    template = golden("burgers")
    ce = build_counterexample(template, 40, 0)
    rep = check_lower_bound(ce, build(template), sigmas=[F(1)])
    assert rep.lemma_ok  # no claim either way about sigma' = sigma_c


def test_combinatorial_lemmas():
    lemma, env = check_combinatorial_lemmas()
    assert lemma.ok and lemma.trials == 12 * 5 * 4
    assert env.ok and env.trials == 4
