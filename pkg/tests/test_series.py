from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gevreylab.analysis import estimate_gevrey
from gevreylab.moments import MomentSequence
from gevreylab.series import TSeries, XSeries, moment_dx, moment_dx_multi, sup_majorant

from oracles import classical_dx

G1, G2 = MomentSequence.gamma(1), MomentSequence.gamma(2)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def polys(draw, dim=1, max_deg=5, cap=None):
    n = draw(st.integers(0, 6))
    coeffs = {}
    for _ in range(n):
        idx = tuple(draw(st.integers(0, max_deg)) for _ in range(dim))
        coeffs[idx] = draw(rationals)
    return XSeries(dim, cap, coeffs)


def x(*idx, c=1, cap=None):
    return XSeries.monomial(idx, c, cap)


def test_mul_examples():
    one = XSeries.constant(1, 1, 2)
    a = one + x(1, cap=2)
    b = one - x(1, cap=2)
    assert a * b == one - x(2, cap=2)
    assert x(1, cap=1) * x(1, cap=1) == XSeries.zero(1, 1)
    assert x(1, 0, c=2) + x(0, 1, c=3) == XSeries(2, None, {(1, 0): 2, (0, 1): 3})


def test_moment_dx_examples():
    assert moment_dx(x(2), 0, G1) == x(1, c=2)
    geo = XSeries.geometric(1, 6)
    assert moment_dx(geo, 0, G1) == XSeries(1, 5, {(j,): j + 1 for j in range(6)})
    # Gamma(5)/Gamma(3) = 12
    assert moment_dx(x(2), 0, G2) == x(1, c=12)


def test_moment_dx_cap_exhausted():
    with pytest.raises(ValueError):
        moment_dx(XSeries.constant(1, 1, 0), 0, G1)


def test_moment_dt_examples():
    phi = XSeries(1, None, {(0,): 1, (3,): 2})
    u = TSeries(G1, (phi, phi.scale(2), phi.scale(4)))
    assert u.moment_dt(0) == u
    assert u.moment_dt(1).entries == (phi.scale(2), phi.scale(4))
    w = TSeries(G1, tuple(phi.scale(j) for j in range(6)))
    assert w.moment_dt(2).order == 3
    assert w.moment_dt(2)[1] == phi.scale(3)


def test_sup_majorant_examples():
    assert sup_majorant(XSeries.zero(1), Fraction(1, 2)) == 0
    assert sup_majorant(XSeries(1, None, {(0,): 1, (1,): 1}), Fraction(1, 2)) == Fraction(3, 2)
    geo = XSeries.geometric(1, 10)
    assert sup_majorant(geo, Fraction(1, 2)) == 2 * (1 - Fraction(1, 2 ** 11))


def test_json_round_trip():
    f = XSeries(2, 4, {(1, 2): Fraction(-3, 7), (0, 0): 5})
    assert XSeries.from_json(f.to_json(), 2, 4) == f


@given(polys(max_deg=8))
def test_moment_dx_gamma1_is_classical(f):
    assert moment_dx(f, 0, G1).coeffs == classical_dx(f.coeffs, (1,))


@given(polys(dim=2), st.sampled_from([G1, G2, MomentSequence.from_ratios([1, 3, 5, 7, 9, 11], 1)]))
def test_moment_derivatives_commute(f, m):
    moments = [m, G2]
    assert moment_dx(moment_dx(f, 0, moments[0]), 1, moments[1]) == moment_dx(
        moment_dx(f, 1, moments[1]), 0, moments[0]
    )
    assert moment_dx_multi(f, (1, 1), moments) == moment_dx(moment_dx(f, 1, G2), 0, m)


@given(polys(dim=2, cap=6), polys(dim=2, cap=6), polys(dim=2, cap=4))
def test_ring_laws(f, g, h):
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f * g).cap == 6 and (f * h).cap == 4


@given(polys(dim=2), polys(dim=2), st.fractions(min_value=Fraction(1, 10), max_value=Fraction(9, 10), max_denominator=10))
def test_sup_majorant_submultiplicative(f, g, rho):
    assert sup_majorant(f * g, rho) <= sup_majorant(f, rho) * sup_majorant(g, rho)


def _heat_like(J: int) -> TSeries:
    # u_j = (2j)! * sum_k x^k: normalized entries grow like those of the classical heat solution
    import math

    return TSeries(
        G1,
        tuple(XSeries.geometric(1, 4).scale(math.factorial(2 * j)) for j in range(J + 1)),
    )


def test_estimate_is_stable_under_moment_derivatives():
    u = _heat_like(42)
    base = estimate_gevrey(u, Fraction(1, 2), (20, 40)).sigma_hat
    after_dt = estimate_gevrey(u.moment_dt(1), Fraction(1, 2), (20, 40)).sigma_hat
    after_dx = estimate_gevrey(u.moment_dx(0, G1), Fraction(1, 2), (20, 40)).sigma_hat
    assert abs(base - 1) < 0.1
    assert abs(after_dt - base) <= 0.1
    assert abs(after_dx - base) <= 0.1
