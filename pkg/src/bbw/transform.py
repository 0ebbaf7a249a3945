"""Multilevel forward and inverse broken-basis wavelet transforms.

Per level, the coarse boundary coefficients come from a small direct solve
and the interior from the inverted lifting factors. Neither the analysis
nor the synthesis matrices are ever formed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import BrokenBasis, build_basis, project, quadrature_moments
from .errors import ConditioningError, ShapeError
from .knots import KnotHierarchy
from .lifting import (
    DetailMatrices,
    InteriorBlocks,
    LiftingScheme,
    WaveletFamily,
    design_final_update,
    factor,
    primitive_details,
    split_interior,
)
from .refinement import RefinementMatrix, refinement_matrix
from .smooth import SmoothFamily


class OpCounter:
    """Tally of multiply-adds, counted as nonzeros touched by each sparse apply."""

    def __init__(self):
        self.count = 0

    def add(self, n: int):
        self.count += int(n)


@dataclass(frozen=True)
class LevelPlan:
    coarse: BrokenBasis
    fine: BrokenBasis
    H: RefinementMatrix
    blocks: InteriorBlocks
    scheme: LiftingScheme
    details: DetailMatrices
    bb_lu: tuple

    @property
    def n_coarse(self) -> int:
        return self.coarse.size

    @property
    def n_fine(self) -> int:
        return self.fine.size

    @property
    def n_detail(self) -> int:
        return self.details.detail.shape[1]

    def wavelets(self) -> WaveletFamily:
        return WaveletFamily(self.fine, self.details, self.blocks.fine_eo)

    def detail_matrix(self):
        """Full G_j (fine size × detail count) with zero boundary rows."""
        G = np.zeros((self.n_fine, self.n_detail))
        G[self.blocks.fine_eo] = self.details.detail
        return G


class TransformPlan:
    """Bases, refinement matrices and lifting schemes for every level of a hierarchy.

    Build once, then run :func:`forward` and :func:`inverse` as often as needed.
    The family must start with the members 1 and x.
    """

    def __init__(self, family: SmoothFamily, hierarchy: KnotHierarchy, vanishing_moments: int = 2):
        if not family.starts_with_one_and_x():
            raise ValueError("the family must start with the members 1 and x")
        if vanishing_moments != 2:
            raise ValueError("only two vanishing moments (a two-diagonal final update) are supported")
        if hierarchy.depth < 1:
            raise ValueError("a transform needs at least two levels")
        self.family = family
        self.hierarchy = hierarchy
        self.p = vanishing_moments
        bases = [build_basis(family, g) for g in hierarchy.levels]
        self.bases = tuple(bases)
        self.levels = tuple(self._plan_level(bases[j], bases[j + 1]) for j in range(hierarchy.depth))

    def _plan_level(self, coarse: BrokenBasis, fine: BrokenBasis) -> LevelPlan:
        m, p = self.family.order, self.p
        H = refinement_matrix(coarse, fine)
        blocks = split_interior(H)
        scheme = factor(blocks.H_eo, m)
        G0 = primitive_details(scheme)
        # coarse moments via H so that they match the fine ones to rounding
        mf_all = quadrature_moments(fine, p - 1)
        mc = (H.sparse.T @ mf_all)[blocks.coarse_eo]
        details = design_final_update(blocks.H_eo, G0, mc, mf_all[blocks.fine_eo], p)
        bb_lu = None
        if blocks.H_bb.size:
            bb_lu = scipy.linalg.lu_factor(blocks.H_bb)
            piv = np.abs(np.diag(bb_lu[0]))
            if np.min(piv) <= 1e-12 * max(np.max(piv), 1.0):
                raise ConditioningError("boundary block of the refinement matrix is singular")
        return LevelPlan(coarse, fine, H, blocks, scheme, details, bb_lu)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def order(self) -> int:
        return self.family.order

    def size(self, j: int) -> int:
        """Number of scaling coefficients at level j."""
        return self.bases[j].size

    def wavelets(self, j: int) -> WaveletFamily:
        return self.levels[j].wavelets()


def _check_length(vec, expected, what):
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1 or vec.size != expected:
        raise ShapeError(f"{what} must have length {expected}, got {vec.shape}")
    return vec


def forward_step(plan: TransformPlan, j: int, s_fine, counter: OpCounter | None = None):
    """One analysis step: fine coefficients at level j+1 to (s_j, d_j)."""
    lv = plan.levels[j]
    s_fine = _check_length(s_fine, lv.n_fine, f"level {j + 1} coefficients")
    b, sch, det = lv.blocks, lv.scheme, lv.details
    s = np.zeros(lv.n_coarse)
    ops = 0
    if lv.bb_lu is not None:
        s[b.coarse_b] = scipy.linalg.lu_solve(lv.bb_lu, s_fine[b.fine_b])
        ops += b.H_bb.size
    t = s_fine[b.fine_eo] - b.H_eo_b @ s[b.coarse_b]
    ops += b.H_eo_b.nnz
    e, o = sch.solve(t[0::2], t[1::2])
    e = e + det.final_update @ o
    ops += sum(step.matrix.nnz for step in sch.steps) + e.size + det.final_update.nnz
    s[b.coarse_eo] = e
    if counter is not None:
        counter.add(ops)
    return s, o


def inverse_step(plan: TransformPlan, j: int, s_coarse, d, counter: OpCounter | None = None):
    """One synthesis step: s_{j+1} = H_j s_j + G_j d_j."""
    lv = plan.levels[j]
    s_coarse = _check_length(s_coarse, lv.n_coarse, f"level {j} coefficients")
    d = _check_length(d, lv.n_detail, f"level {j} details")
    b, sch, det = lv.blocks, lv.scheme, lv.details
    e = s_coarse[b.coarse_eo] - det.final_update @ d
    e, o = sch.apply(e, d)
    out = np.zeros(lv.n_fine)
    t = np.empty(b.fine_eo.size)
    t[0::2], t[1::2] = e, o
    sb = s_coarse[b.coarse_b]
    out[b.fine_eo] = t + b.H_eo_b @ sb
    out[b.fine_b] = b.H_bb @ sb
    if counter is not None:
        counter.add(sum(step.matrix.nnz for step in sch.steps) + e.size + det.final_update.nnz)
        counter.add(b.H_eo_b.nnz + b.H_bb.size)
    return out


@dataclass
class CoefficientPyramid:
    """Coarsest scaling coefficients plus details d_0 (coarsest) to d_{L-1}."""

    coarse: np.ndarray
    details: list

    @property
    def level_count(self) -> int:
        return len(self.details)

    @property
    def total_size(self) -> int:
        return self.coarse.size + sum(d.size for d in self.details)

    def to_json(self) -> str:
        return json.dumps({"coarse": self.coarse.tolist(), "details": [d.tolist() for d in self.details]})

    @classmethod
    def from_json(cls, text: str) -> "CoefficientPyramid":
        data = json.loads(text)
        return cls(np.asarray(data["coarse"], dtype=float), [np.asarray(d, dtype=float) for d in data["details"]])

    def to_csv(self) -> str:
        """Rows ``level,index,value``; the coarse coefficients use level -1."""
        buf = io.StringIO()
        buf.write("level,index,value\n")
        for i, v in enumerate(self.coarse):
            buf.write(f"-1,{i},{v:.17g}\n")
        for j, d in enumerate(self.details):
            for i, v in enumerate(d):
                buf.write(f"{j},{i},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CoefficientPyramid":
        coarse, details = {}, {}
        for row in csv.DictReader(io.StringIO(text)):
            level, idx, val = int(row["level"]), int(row["index"]), float(row["value"])
            (coarse if level < 0 else details.setdefault(level, {}))[idx] = val
        to_vec = lambda d: np.array([d[i] for i in range(len(d))])  # noqa: E731
        return cls(to_vec(coarse), [to_vec(details[j]) for j in range(len(details))])


def forward(plan: TransformPlan, s_fine, counter: OpCounter | None = None) -> CoefficientPyramid:
    """Full analysis from the finest level down to level 0."""
    s = _check_length(s_fine, plan.size(plan.depth), "finest coefficients")
    details = []
    for j in reversed(range(plan.depth)):
        s, d = forward_step(plan, j, s, counter)
        details.append(d)
    return CoefficientPyramid(s, details[::-1])


def inverse(plan: TransformPlan, pyramid: CoefficientPyramid, counter: OpCounter | None = None):
    if pyramid.level_count != plan.depth:
        raise ShapeError(f"pyramid has {pyramid.level_count} detail levels, plan has {plan.depth}")
    s = pyramid.coarse
    for j in range(plan.depth):
        s = inverse_step(plan, j, s, pyramid.details[j], counter)
    return s


def analyze_function(plan: TransformPlan, f) -> CoefficientPyramid:
    """Project ``f`` onto the finest basis, then transform."""
    coeffs, _ = project(plan.bases[-1], f)
    return forward(plan, coeffs)
