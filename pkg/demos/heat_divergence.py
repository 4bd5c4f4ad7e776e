"""The heat equation with analytic data has a divergent formal solution.

Solve Dt u = Dx^2 u with u(0, x) = 1/(1 - x), print how fast u_j(0) grows,
and compare the fitted Gevrey order with the critical value.

    python3 demos/heat_divergence.py
"""
import math
from fractions import Fraction

from gevreylab.analysis import estimate_gevrey
from gevreylab.eqdsl import parse
from gevreylab.polygon import build
from gevreylab.solver import SolveRequest, solve

spec = parse("init 0 = geom\nDt u - Dx^2 u = 0")
sol = solve(SolveRequest(spec, 40, 0))

# u_j(0) = (2j)!, so the ordinary coefficients (2j)!/j! grow like j! 4^j
for j in (1, 5, 10, 20, 40):
    value = sol.value_at_zero(j)
    print(f"j = {j:2d}  u_j(0) = {value:.3e}  equals (2j)!: {value == math.factorial(2 * j)}")

est = estimate_gevrey(sol.u, Fraction(1, 2), (20, 40))
print(f"fitted order {est.sigma_hat:.4f}, sigma_c = {build(spec).sigma_c}")

# The same equation with polynomial data terminates and carries no growth at all.
poly = solve(SolveRequest(parse("init 0 = x^2\nDt u - Dx^2 u = 0"), 40, 2))
print("polynomial data:", estimate_gevrey(poly.u, Fraction(1, 2), (20, 40)).degenerate and "degenerate window")

# Raising the time order s0 to 2 puts the equation below the threshold.
slow = parse("moment t = gamma(2)\ninit 0 = geom\nDt u - Dx^2 u = 0")
est2 = estimate_gevrey(solve(SolveRequest(slow, 40, 0)).u, Fraction(1, 2), (20, 40))
print(f"s0 = 2: fitted order {est2.sigma_hat:.4f}, sigma_c = {build(slow).sigma_c}")
