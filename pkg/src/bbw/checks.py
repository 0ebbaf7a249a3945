"""Numerical self-checks for one family on one knot hierarchy."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .basis import BrokenBasis, quadrature_moments
from .lifting import reconstruct_interior, scheme_parameters
from .refinement import jump_matrix, row_sum_check
from .smooth import SmoothFamily
from .transform import TransformPlan, analyze_function, forward, inverse


def tolerance_scale() -> float:
    """Multiplier for every check tolerance, read from BBW_TOLERANCE_SCALE."""
    raw = os.environ.get("BBW_TOLERANCE_SCALE", "1")
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"BBW_TOLERANCE_SCALE must be a number, got {raw!r}") from None
    if not value > 0:
        raise ValueError("BBW_TOLERANCE_SCALE must be positive")
    return value


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.3e} (tol {self.tolerance:.0e})"


def basis_weld_error(basis: BrokenBasis) -> float:
    """Largest relative jump of derivatives 0..m-2 at interior knots, plus boundary residue."""
    m = basis.order
    worst = 0.0
    for p in range(1, basis.n_knots - 1):
        left, right = basis.knot_data(p, "left"), basis.knot_data(p, "right")
        scale = np.maximum(np.abs(left), np.abs(right)).max(axis=0)[: m - 1]
        jump = np.abs(left - right)[:, : m - 1]
        worst = max(worst, float(np.max(jump / np.maximum(scale, 1.0))))
    for p, side in ((0, "right"), (basis.n_knots - 1, "left")):
        data = basis.knot_data(p, side)
        scale = np.maximum(np.abs(data).max(axis=0), 1.0)
        for k in range(basis.size):
            # distance from the boundary in function index
            dist = k if p == 0 else basis.size - 1 - k
            for r in range(min(dist, m - 1)):
                worst = max(worst, abs(data[k, r]) / scale[r])
    return worst


def normalized_jumps(fine: BrokenBasis, H) -> float:
    """max |Delta H| with every jump row scaled to unit max-norm."""
    D = jump_matrix(fine)
    D /= np.maximum(np.abs(D).max(axis=1, keepdims=True), np.finfo(float).tiny)
    return float(np.max(np.abs(D @ H.toarray()), initial=0.0))


def two_scale_residual(coarse: BrokenBasis, fine: BrokenBasis, H, samples: int = 1000) -> float:
    x = np.linspace(0.0, 1.0, samples)
    return float(np.max(np.abs(coarse.evaluate(x) - fine.evaluate(x) @ H.toarray())))


def wavelet_moment_error(plan: TransformPlan, j: int, qmax: int = 1) -> float:
    lv = plan.levels[j]
    mf = quadrature_moments(lv.fine, qmax)
    return float(np.max(np.abs(lv.detail_matrix().T @ mf)))


def run_checks(family: SmoothFamily, hierarchy, p: int = 2, seed: int = 0, prefix: str = "") -> list:
    """Evaluate every self-check and return the results (tolerances already scaled)."""
    s = tolerance_scale()
    plan = TransformPlan(family, hierarchy, p)
    m = family.order
    rng = np.random.default_rng(seed)
    out = []

    def add(name, value, tol):
        out.append(CheckResult(prefix + name, float(value), tol * s))

    add("basis welds and boundary conditions", max(basis_weld_error(b) for b in plan.bases), 1e-8)
    x = np.linspace(0.0, 1.0, 1001)
    pou = max(np.max(np.abs(b.evaluate(x).sum(axis=1) - family.members[0](x))) for b in plan.bases)
    add("partition of unity", pou, 1e-10)
    add("refinement row sums", max(row_sum_check(lv.H) for lv in plan.levels), 1e-10)
    add("normalized jumps of coarse functions", max(normalized_jumps(lv.fine, lv.H) for lv in plan.levels), 1e-8)
    first_row = max(np.max(np.abs(lv.H.toarray()[0] - np.eye(1, lv.n_coarse)[0])) for lv in plan.levels)
    add("first refinement row is a unit vector", first_row, 1e-300)
    add(
        "two-scale residual",
        max(two_scale_residual(lv.coarse, lv.fine, lv.H) for lv in plan.levels),
        1e-8,
    )
    add(
        "lifting factor reconstruction",
        max(np.max(np.abs(reconstruct_interior(lv.scheme) - lv.blocks.H_eo)) for lv in plan.levels),
        1e-10,
    )
    u, r = scheme_parameters(m)
    bad = sum(len(lv.scheme.steps) != r + 2 * u for lv in plan.levels)
    add("scheme step count", bad, 0.5)
    add("vanishing moments (q = 0, 1)", max(wavelet_moment_error(plan, j) for j in range(plan.depth)), 1e-9)
    rt = 0.0
    for _ in range(10):
        v = rng.standard_normal(plan.size(plan.depth))
        rt = max(rt, float(np.max(np.abs(inverse(plan, forward(plan, v)) - v))))
    add("perfect reconstruction", rt, 1e-9)
    span = 0.0
    for member in family.members:
        pyr = analyze_function(plan, member)
        span = max(span, max(float(np.max(np.abs(d))) for d in pyr.details))
    add("details of family members", span, 1e-8)
    return out
