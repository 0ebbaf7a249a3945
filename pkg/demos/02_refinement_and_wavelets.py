"""Refinement matrices, their lifting factorization, and wavelets with two vanishing moments.

Run: python3 demos/02_refinement_and_wavelets.py
"""

import numpy as np
import scipy.integrate

from bbw import KnotHierarchy, SmoothFamily, TransformPlan
from bbw.lifting import reconstruct_interior

# Equispaced cubic splines recover the classical subdivision mask.
plan = TransformPlan(SmoothFamily.powers(4), KnotHierarchy.from_coarse(np.linspace(0, 1, 9), 1))
H = plan.levels[0].H
print("interior cubic column:", np.round(H.column(5)[7:12], 12))

# On random knots the refinement is no longer stationary, but the factorization still holds.
rng = np.random.default_rng(0)
hier = KnotHierarchy.random(rng, 6, 1)
for m in range(2, 8):
    lv = TransformPlan(SmoothFamily.powers(m), hier).levels[0]
    steps = "".join(s.kind for s in lv.scheme.steps)
    err = np.max(np.abs(reconstruct_interior(lv.scheme) - lv.blocks.H_eo))
    print(f"order {m}: steps {steps or '-'} then D, reconstruction error {err:.1e}")

# The final update gives every wavelet zero mean and zero first moment.
lv = TransformPlan(SmoothFamily.powers(4), hier).levels[0]
psi = lv.wavelets()
brk = hier[1].knots
for c in range(psi.size):
    m0, _ = scipy.integrate.quad(lambda t: psi.evaluate(t)[c], 0, 1, points=brk)
    m1, _ = scipy.integrate.quad(lambda t: psi.evaluate(t)[c] * t, 0, 1, points=brk)
    print(f"wavelet {c}: support {psi.support(c)[0]:.3f}..{psi.support(c)[1]:.3f}, moments {m0:+.1e} {m1:+.1e}")

# Cubic-spline and trigonometric wavelets on the same knots nearly coincide.
knots = KnotHierarchy.from_coarse([0.0, 0.08, 0.22, 0.41, 0.57, 0.79, 1.0], 1)
trig = SmoothFamily.from_descriptors(
    [{"kind": "power", "degree": 0}, {"kind": "power", "degree": 1}, {"kind": "sin", "freq": 1}, {"kind": "cos", "freq": 1}]
)
x = np.linspace(0, 1, 1000)
W_cubic = TransformPlan(SmoothFamily.powers(4), knots).wavelets(0).evaluate(x)
W_trig = TransformPlan(trig, knots).wavelets(0).evaluate(x)
scale = np.max(np.abs(W_cubic), axis=0)
gap = np.max(np.abs(W_cubic / scale - W_trig / scale))
print(f"largest difference between cubic and trig wavelets (each scaled by the cubic peak): {gap:.3f}")
