"""The critical value cannot be lowered: a Burgers solution that is exactly 1-Gevrey.

    python3 demos/sharpness.py
"""
from fractions import Fraction

from gevreylab.analysis import check_lower_bound, estimate_gevrey
from gevreylab.eqdsl import parse
from gevreylab.polygon import build
from gevreylab.solver import build_counterexample

template = parse("init 0 = geom\nDt u - Dx^2 u - 2*u*Dx u = 0")
poly = build(template)
ce = build_counterexample(template, 40, 0)

print(f"distinguished term {ce.kstar}: v* = {ce.v_star}, i* = {ce.i_star}, q* = {ce.q_star}")
print("first values u_n(0):", [int(v) for v in ce.values[:6]])

est = estimate_gevrey(ce.solution.u, Fraction(1, 2))
print(f"fitted order {est.sigma_hat:.4f} against sigma_c = {poly.sigma_c}")

rep = check_lower_bound(ce, poly, [Fraction(9, 10), Fraction(3, 4), Fraction(1, 2)])
print(f"log u_n(0) - log n! >= {rep.log_C:.3f} + {rep.log_K:.3f} n on the whole range")
for t in rep.tested:
    print(f"  sigma' = {t['sigma_prime']:>5s}: fitted envelope broken first at j = {t['first_j']}")
