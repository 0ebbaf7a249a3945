"""Two-scale refinement matrices between broken bases on nested grids.

Column k of H is filled in two passes. Rows whose last nonzero column is
k follow from the row sums (H @ 1 = 1); the remaining entries solve the
overdetermined system expressing that the coarse function has no jump in
its (m-1)-th derivative at the new (odd) knots.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .basis import BrokenBasis
from .errors import ConditioningError, InconsistencyError, SizeError

LSQ_TOL = 1e-8
VERIFY_TOL = 1e-8


def band_rows(k: int, m: int, n_coarse: int) -> tuple[int, int]:
    """Inclusive row range of the structural nonzeros of column k.

    The support rule gives 2k-m+1 <= l <= 2k+1; the clamped boundaries
    add l >= k on the left and its mirror l <= k + n_coarse - 1 on the right.
    """
    return max(k, 2 * k - m + 1), min(2 * k + 1, k + n_coarse - 1)


@dataclass(frozen=True)
class RefinementMatrix:
    """Banded refinement matrix stored column by column."""

    rows: int
    cols: int
    starts: tuple
    values: tuple
    order: int

    @property
    def shape(self):
        return self.rows, self.cols

    @property
    def n_left(self) -> int:
        """Boundary rows/columns taken out on the left: ceil(m/2) - 1."""
        return -(-self.order // 2) - 1

    @property
    def n_right(self) -> int:
        return self.order // 2 - 1

    def column(self, k: int):
        out = np.zeros(self.rows)
        s, v = self.starts[k], self.values[k]
        out[s : s + v.size] = v
        return out

    @cached_property
    def sparse(self):
        r, c, v = [], [], []
        for k, (s, vals) in enumerate(zip(self.starts, self.values)):
            r.extend(range(s, s + vals.size))
            c.extend([k] * vals.size)
            v.extend(vals)
        return sp.csc_array((v, (r, c)), shape=self.shape)

    def toarray(self):
        return self.sparse.toarray()

    def __matmul__(self, other):
        return self.sparse @ other

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "columns": [{"start": int(s), "values": v.tolist()} for s, v in zip(self.starts, self.values)],
        }

    @classmethod
    def from_dict(cls, data: dict, order: int) -> "RefinementMatrix":
        cols = data["columns"]
        return cls(
            int(data["rows"]),
            int(data["cols"]),
            tuple(int(c["start"]) for c in cols),
            tuple(np.asarray(c["values"], dtype=float) for c in cols),
            order,
        )

    @classmethod
    def identity(cls, size: int, order: int) -> "RefinementMatrix":
        return cls(size, size, tuple(range(size)), tuple(np.ones(1) for _ in range(size)), order)


def row_sum_check(H: RefinementMatrix) -> float:
    """Largest deviation of a row sum of H from one."""
    return float(np.max(np.abs(H @ np.ones(H.cols) - 1.0)))


def jump_matrix(fine: BrokenBasis, odd=None):
    """Jumps of the (m-1)-th derivative of the fine functions at the odd knots.

    Row ``r`` belongs to knot ``odd[r]`` (default 1, 3, 5, ...), column
    ``l`` to fine function l. Entries outside ``l-m+1 <= i <= l+1`` are
    structural zeros.
    """
    m, n = fine.order, fine.n_knots
    if odd is None:
        odd = np.arange(1, n - 1, 2)
    D = np.zeros((len(odd), fine.size))
    for r, i in enumerate(odd):
        right = fine._seg_left[i, :, m - 1]
        left = fine._seg_right[i - 1, :, m - 1]
        D[r, i : i + m] += right
        D[r, i - 1 : i - 1 + m] -= left
    return D


def _check_nested(coarse: BrokenBasis, fine: BrokenBasis):
    if coarse.order != fine.order or coarse.family != fine.family:
        raise ValueError("coarse and fine bases must share the family")
    xc, xf = coarse.knots, fine.knots
    if xf.size != 2 * xc.size - 1 or not np.array_equal(xf[0::2], xc):
        raise SizeError("fine grid must be the even-odd refinement of the coarse grid")


def refinement_matrix(coarse: BrokenBasis, fine: BrokenBasis, verify: bool = True) -> RefinementMatrix:
    """Refinement matrix H with ``Phi_coarse(x) = Phi_fine(x) @ H``.

    Raises:
        InconsistencyError: if the jump equations of a column have no exact
            solution or the final two-scale check fails.
        ConditioningError: if a column's jump system is rank deficient.
    """
    m = coarse.order
    if np.array_equal(coarse.knots, fine.knots) and coarse.family == fine.family:
        return RefinementMatrix.identity(coarse.size, m)
    _check_nested(coarse, fine)
    nc, nf = coarse.n_knots, fine.n_knots
    M, N = coarse.size, fine.size

    ranges = [band_rows(k, m, nc) for k in range(M)]
    last_col = np.full(N, -1)
    for k, (lo, hi) in enumerate(ranges):
        last_col[lo : hi + 1] = k

    odd = np.arange(1, nf - 1, 2)
    D = jump_matrix(fine, odd)
    # equilibrate each jump equation so the residual test is scale free
    D /= np.maximum(np.abs(D).max(axis=1, keepdims=True), np.finfo(float).tiny)

    prefix = np.zeros(N)
    starts, values = [], []
    for k, (lo, hi) in enumerate(ranges):
        rows = np.arange(lo, hi + 1)
        fixed = last_col[rows] == k
        col = np.zeros(rows.size)
        col[fixed] = 1.0 - prefix[rows[fixed]]
        eq = odd[(odd >= 2 * k - 2 * m + 2) & (odd <= 2 * k + 2)]
        A = D[(eq - 1) // 2][:, rows]
        free = ~fixed
        if free.any():
            if eq.size < free.sum():
                raise ConditioningError(f"column {k}: {eq.size} jump equations for {free.sum()} unknowns", k)
            rhs = -A[:, fixed] @ col[fixed]
            sol, _, rank, _ = np.linalg.lstsq(A[:, free], rhs, rcond=None)
            if rank < free.sum():
                raise ConditioningError(f"column {k}: jump system is rank deficient", k)
            col[free] = sol
        resid = np.max(np.abs(A @ col), initial=0.0)
        if resid > LSQ_TOL * max(1.0, np.max(np.abs(col))):
            raise InconsistencyError(f"column {k}: jump equations leave residual {resid:.2e}")
        prefix[rows] += col
        starts.append(lo)
        values.append(col)

    H = RefinementMatrix(N, M, tuple(starts), tuple(values), m)
    if verify:
        err = two_scale_knot_error(coarse, fine, H)
        if err > VERIFY_TOL:
            raise InconsistencyError(f"two-scale check failed at the fine knots (error {err:.2e})")
    return H


def two_scale_knot_error(coarse: BrokenBasis, fine: BrokenBasis, H: RefinementMatrix) -> float:
    """Scaled mismatch of Phi_coarse and Phi_fine @ H over all one-sided knot data.

    Derivative r is multiplied by (local fine width)**r before comparing.
    """
    m = coarse.order
    xf = fine.knots
    hf = np.diff(xf)
    Hs = H.sparse
    worst = 0.0
    for p in range(fine.n_knots):
        for side in ("left", "right"):
            if (side == "left" and p == 0) or (side == "right" and p == fine.n_knots - 1):
                continue
            h = hf[p - 1] if side == "left" else hf[p]
            scale = h ** np.arange(m)
            lhs = np.stack([coarse.evaluate(xf[p], r, side) for r in range(m)], axis=1)
            rhs = Hs.T @ fine.knot_data(p, side)
            worst = max(worst, float(np.max(np.abs((lhs - rhs) * scale))))
    return worst
