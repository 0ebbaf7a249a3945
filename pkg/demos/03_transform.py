"""Multilevel forward and inverse transform on a random nonequispaced hierarchy.

Run: python3 demos/03_transform.py
"""

import numpy as np

from bbw import KnotHierarchy, SmoothFamily, TransformPlan, analyze_function, forward, inverse
from bbw.transform import OpCounter

rng = np.random.default_rng(7)
hier = KnotHierarchy.random(rng, 5, 3)
plan = TransformPlan(SmoothFamily.powers(3), hier)
print("knots per level:", [g.count for g in hier.levels])

s = rng.standard_normal(plan.size(3))
pyr = forward(plan, s)
print("pyramid sizes: coarse", pyr.coarse.size, "details", [d.size for d in pyr.details])
print(f"round trip error {np.max(np.abs(inverse(plan, pyr) - s)):.1e}")

# A smooth function leaves small details; a linear one leaves none.
for label, f in [("exp(x)", np.exp), ("2 - 3x", lambda x: 2 - 3 * x)]:
    pyr = analyze_function(plan, f)
    print(label, "largest detail per level:", [f"{np.max(np.abs(d)):.1e}" for d in pyr.details])

# Work per level grows linearly with the number of knots.
counter = OpCounter()
forward(plan, s, counter)
print("multiply-adds for the full forward transform:", counter.count)
