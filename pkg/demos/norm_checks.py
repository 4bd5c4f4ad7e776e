"""Random checks of the Nagumo-norm inequalities, then the same checks with s = 1/2.

    python3 demos/norm_checks.py
"""
from fractions import Fraction

from gevreylab.analysis import check_norm_properties

ok = check_norm_properties(seed=3, trials=120)
for c in ok.checks:
    print(f"{c.name:22s} {c.trials} trials, {len(c.failures)} failures")

# Orders below 1 break submultiplicativity; trial 0 is the pair that shows it.
bad = check_norm_properties(seed=3, trials=20, s_override=Fraction(1, 2))
product = next(c for c in bad.checks if c.name == "product")
w = product.failures[0]
print(f"s = 1/2: product inequality fails, ||fg|| = {w['lhs']} > ||f|| ||g|| = {w['rhs']} (r = {w['r']})")
