"""Broken bases from two building families on the same nonequispaced knots.

Powers [1, x, x^2, x^3] weld into cubic B-splines. Swapping the last two
members for sin(2 pi x) and cos(2 pi x) gives a basis that looks much the
same but reproduces cos(2 pi x) exactly. Run: python3 demos/01_broken_bases.py
"""

import numpy as np

from bbw import SmoothFamily, build_basis, project
from bbw.smooth import Cosine

knots = [0.0, 0.08, 0.22, 0.41, 0.57, 0.79, 1.0]
cubic = SmoothFamily.powers(4)
trig = SmoothFamily.from_descriptors(
    [
        {"kind": "power", "degree": 0},
        {"kind": "power", "degree": 1},
        {"kind": "sin", "freq": 1},
        {"kind": "cos", "freq": 1},
    ]
)

x = np.linspace(0, 1, 1000)
for name, fam in [("cubic powers", cubic), ("1, x, sin, cos", trig)]:
    basis = build_basis(fam, knots)
    values = basis.evaluate(x)
    print(f"{name}: {basis.size} functions on {len(knots)} knots")
    print(f"  partition of unity error {np.max(np.abs(values.sum(axis=1) - 1)):.1e}")
    _, err = project(basis, Cosine(1.0), x)
    print(f"  projection of cos(2 pi x): max error {np.max(np.abs(err)):.2e}")

# The two bases differ only a little; compare them pointwise.
diff = np.max(np.abs(build_basis(cubic, knots).evaluate(x) - build_basis(trig, knots).evaluate(x)))
print(f"largest pointwise difference between the two bases: {diff:.3f}")
