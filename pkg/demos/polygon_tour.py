"""Walk through the golden equations and print their Newton polygons.

    python3 demos/polygon_tour.py
"""
from pathlib import Path

from gevreylab.eqdsl import parse
from gevreylab.polygon import build, format_sigma

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

for path in sorted(GOLDEN.glob("*.eq")):
    spec = parse(path.read_text())
    poly = build(spec)
    chain = " -> ".join(f"({x}, {y})" for x, y in poly.hull)
    slopes = ", ".join(str(k) for k in poly.positive_slopes) or "none"
    print(f"{path.stem:16s} sigma_c = {format_sigma(poly.sigma_c):5s} chain {chain}  slopes {slopes}")

# Changing a single order moves points across the principal abscissa s0*kappa.
# The heat equation with s0 = 2 has its diffusion point at x = 2 = s0: S is empty.
for s0 in (1, 2, 3):
    spec = parse(f"moment t = gamma({s0})\ninit 0 = geom\nDt u - Dx^2 u = 0")
    print(f"heat with s0 = {s0}: sigma_c = {format_sigma(build(spec).sigma_c)}")
