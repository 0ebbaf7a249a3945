"""Lifting factorization of the interior refinement and wavelet design.

The interior block H_eo (boundary rows and columns removed) is split into
even rows H_e and odd rows H_o. A Euclid-type band elimination reduces
[H_e; H_o] to [D; 0] by alternating bidiagonal prediction steps
(O <- O - P E) and update steps (E <- E + U O). Read backwards, the steps
factor the refinement and define a primitive detail matrix G0. A final
update U then fixes the wavelets' vanishing moments:
G = G0 - H_eo @ U.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import BrokenBasis
from .errors import DesignError, FactoringError, StructuralError
from .refinement import RefinementMatrix

PIVOT_TOL = 1e-12
CANCEL_TOL = 1e-9


def scheme_parameters(order: int) -> tuple[int, int]:
    """Pair count u and scheme flag r for a family of the given order."""
    u = (order + 1) // 4
    r = -(-order // 2) - 2 * u
    return u, r


@dataclass(frozen=True)
class InteriorBlocks:
    """H split into boundary and interior parts.

    ``fine_b``/``coarse_b`` list the boundary indices (left ones first, then
    right ones); ``fine_eo``/``coarse_eo`` the interior ranges.
    """

    H_bb: np.ndarray
    H_eo_b: sp.csr_array
    H_eo: np.ndarray
    fine_b: np.ndarray
    fine_eo: np.ndarray
    coarse_b: np.ndarray
    coarse_eo: np.ndarray

    @property
    def H_e(self):
        return self.H_eo[0::2]

    @property
    def H_o(self):
        return self.H_eo[1::2]


def split_interior(H: RefinementMatrix) -> InteriorBlocks:
    """Take the first ceil(m/2)-1 and last floor(m/2)-1 rows and columns out of H.

    Raises:
        StructuralError: if a boundary row has a nonzero in an interior column.
    """
    bl, br = H.n_left, H.n_right
    N, M = H.shape
    fine_b = np.r_[np.arange(bl), np.arange(N - br, N)].astype(int)
    coarse_b = np.r_[np.arange(bl), np.arange(M - br, M)].astype(int)
    fine_eo = np.arange(bl, N - br)
    coarse_eo = np.arange(bl, M - br)
    Hd = H.toarray()
    if np.any(Hd[np.ix_(fine_b, coarse_eo)] != 0.0):
        raise StructuralError("boundary fine functions contribute to interior coarse functions")
    return InteriorBlocks(
        H_bb=Hd[np.ix_(fine_b, coarse_b)],
        H_eo_b=sp.csr_array(Hd[np.ix_(fine_eo, coarse_b)]),
        H_eo=Hd[np.ix_(fine_eo, coarse_eo)],
        fine_b=fine_b,
        fine_eo=fine_eo,
        coarse_b=coarse_b,
        coarse_eo=coarse_eo,
    )


@dataclass(frozen=True)
class LiftingStep:
    """One bidiagonal factor. ``kind`` is 'P' (n'×n) or 'U' (n×n')."""

    kind: str
    matrix: sp.csr_array


@dataclass(frozen=True)
class LiftingScheme:
    """Factors in left-to-right product order, followed by diag(D, I)."""

    order: int
    steps: tuple
    scale: np.ndarray
    n_coarse: int
    n_detail: int

    @property
    def u(self) -> int:
        return scheme_parameters(self.order)[0]

    @property
    def r(self) -> int:
        return scheme_parameters(self.order)[1]

    @property
    def scheme_kind(self) -> str:
        return "scheme1" if self.r else "scheme0"

    @property
    def initial_prediction(self):
        return self.steps[0].matrix if self.r else None

    @property
    def pairs(self):
        s = self.steps[self.r :]
        return [(s[2 * i].matrix, s[2 * i + 1].matrix) for i in range(len(s) // 2)]

    def apply(self, even, odd):
        """Multiply [even; odd] by the factor product (synthesis direction)."""
        e = even * self.scale
        o = odd.copy()
        for step in reversed(self.steps):
            if step.kind == "P":
                o = o + step.matrix @ e
            else:
                e = e - step.matrix @ o
        return e, o

    def solve(self, even, odd):
        """Invert :meth:`apply` (analysis direction)."""
        e, o = even.copy(), odd.copy()
        for step in self.steps:
            if step.kind == "P":
                o = o - step.matrix @ e
            else:
                e = e + step.matrix @ o
        return e / self.scale, o

    def to_dict(self) -> dict:
        out = []
        for idx, step in enumerate(self.steps):
            kind = "P0" if (idx == 0 and self.r and step.kind == "P") else step.kind
            coo = step.matrix.tocoo()
            band = [[int(i), int(j), float(v)] for i, j, v in zip(coo.row, coo.col, coo.data)]
            out.append({"type": kind, "band": band})
        out.append({"type": "D", "band": [[i, i, float(d)] for i, d in enumerate(self.scale)]})
        return {"order": self.order, "scheme": self.scheme_kind, "u": self.u, "steps": out}


def _interleave(even, odd):
    n = even.shape[0] + odd.shape[0]
    out = np.empty((n,) + even.shape[1:])
    out[0::2] = even
    out[1::2] = odd
    return out


def _offsets(order: int, n_left: int):
    """Diagonal offset ranges (c - c') of the even and odd blocks of H_eo."""
    e_lo = -((n_left + 1) // 2)
    e_hi = (order - 1 - n_left) // 2
    o_lo = -(n_left // 2)
    o_hi = (order - n_left) // 2
    return [e_lo, e_hi], [o_lo, o_hi]


def factor(H_eo, order: int) -> LiftingScheme:
    """Factor the interior refinement into bidiagonal lifting steps.

    The step sequence is P0 (only if r = 1) followed by u (U, P) pairs. A
    step whose target band is one wider than the source band cancels both
    outermost diagonals. When the widths are equal either outer diagonal can
    go; which one works depends on the boundary rows, so the choices are
    searched (upper diagonal first) until the elimination ends in [D; 0].

    Raises:
        FactoringError: if no choice reaches [D; 0]; ``step`` is the deepest
            step at which elimination broke down.
    """
    H_eo = np.asarray(H_eo, dtype=float)
    n_fine, n = H_eo.shape
    if n_fine != 2 * n - 1:
        raise FactoringError("interior block must have 2n-1 rows for n columns")
    u, r = scheme_parameters(order)
    kinds = ["P"] * r + ["U", "P"] * u
    worst = None
    for ends in itertools.product(("hi", "lo"), repeat=len(kinds)):
        try:
            steps, d = _eliminate(H_eo, order, kinds, ends)
        except FactoringError as exc:
            if worst is None or (exc.step or 0) > (worst.step or 0):
                worst = exc
            continue
        return LiftingScheme(order, steps, d, n, n - 1)
    raise worst


def _eliminate(H_eo, order, kinds, ends):
    n = H_eo.shape[1]
    E, O = H_eo[0::2].copy(), H_eo[1::2].copy()
    erange, orange = _offsets(order, -(-order // 2) - 1)
    tol = CANCEL_TOL * np.max(np.abs(H_eo))
    steps = []
    for idx, (kind, end) in enumerate(zip(kinds, ends)):
        T, S, trange, srange = (O, E, orange, erange) if kind == "P" else (E, O, erange, orange)
        (tlo, thi), (slo, shi) = trange, srange
        diff = (thi - tlo) - (shi - slo)
        if diff == 1:
            new, base = [tlo + 1, thi - 1], [tlo - slo, thi - shi]
        elif diff == 0:
            if end == "hi":
                new, base = [tlo, thi - 1], [thi - shi]
            else:
                new, base = [tlo + 1, thi], [tlo - slo]
        else:
            raise FactoringError(f"step {idx}: target band narrower than source", idx)
        F = sp.lil_array((T.shape[0], S.shape[0]))
        for row in range(T.shape[0]):
            keep = np.zeros(n, dtype=bool)
            keep[max(row + new[0], 0) : max(row + new[1] + 1, 0)] = True
            coef, srcs = _clear_row(T[row], S, row, ~keep, base, tol)
            if coef is None:
                raise FactoringError(f"step {idx}: cannot clear row {row} (zero pivot)", idx)
            for s_, c in zip(srcs, coef):
                F[row, s_] = c
            T[row] -= coef @ S[srcs]
            T[row, ~keep] = 0.0
        trange[:] = new
        F = F.tocsr()
        steps.append(LiftingStep(kind, F if kind == "P" else sp.csr_array(-F)))

    offdiag = E - np.diag(np.diag(E))
    if np.max(np.abs(O), initial=0.0) > tol or np.max(np.abs(offdiag)) > tol:
        raise FactoringError("elimination did not reach [D; 0]", len(kinds))
    d = np.diag(E).copy()
    if np.any(np.abs(d) <= PIVOT_TOL):
        raise FactoringError("scaling matrix D has a zero entry", len(kinds))
    return tuple(steps), d


def _clear_row(t, S, row, outside, base, tol):
    """Coefficients c on the aligned source rows with t - c @ S[srcs] zero outside the band."""
    if not np.any(np.abs(t[outside]) > tol):
        return np.zeros(0), np.zeros(0, dtype=int)
    srcs = np.array([row + b for b in sorted(set(base)) if 0 <= row + b < S.shape[0]], dtype=int)
    if srcs.size == 0:
        return None, None
    A = S[srcs][:, outside].T
    coef, *_ = np.linalg.lstsq(A, t[outside], rcond=None)
    if np.max(np.abs(t[outside] - A @ coef)) > tol:
        return None, None
    return coef, srcs


def primitive_details(scheme: LiftingScheme):
    """Primitive detail matrix G0 (2n-1 × n-1), rows in interior fine order."""
    n, nd = scheme.n_coarse, scheme.n_detail
    even = np.zeros((n, nd))
    odd = np.eye(nd)
    for step in reversed(scheme.steps):
        if step.kind == "P":
            odd = odd + step.matrix @ even
        else:
            even = even - step.matrix @ odd
    return _interleave(even, odd)


def reconstruct_interior(scheme: LiftingScheme):
    """The H block of the factor product, for checking against H_eo."""
    n = scheme.n_coarse
    even, odd = np.diag(scheme.scale), np.zeros((scheme.n_detail, n))
    for step in reversed(scheme.steps):
        if step.kind == "P":
            odd = odd + step.matrix @ even
        else:
            even = even - step.matrix @ odd
    return _interleave(even, odd)


@dataclass(frozen=True)
class DetailMatrices:
    primitive: np.ndarray
    final_update: sp.csr_array
    detail: np.ndarray
    moment_orders: np.ndarray = field(repr=False)


def _update_rows(col: int, n: int, p: int):
    lo = col - (p - 1) // 2
    lo = min(max(lo, 0), max(n - p, 0))
    return np.arange(lo, min(lo + p, n))


def design_final_update(H_eo, G0, coarse_moments, fine_moments, p: int = 2) -> DetailMatrices:
    """Final update giving every wavelet ``p`` vanishing moments.

    ``coarse_moments`` (n × p) and ``fine_moments`` (2n-1 × p) hold the
    total moments against x**q of the interior coarse and fine functions.
    Column c of U is nonzero on p consecutive coarse rows (c, c+1 for
    p = 2); each column solves a p×p moment system.

    Raises:
        DesignError: if a moment system is singular.
    """
    H_eo = np.asarray(H_eo)
    n, nd = H_eo.shape[1], G0.shape[1]
    Mc = np.asarray(coarse_moments)[:, :p]
    target = G0.T @ np.asarray(fine_moments)[:, :p]
    U = sp.lil_array((n, nd))
    orders = np.empty(nd, dtype=int)
    for c in range(nd):
        rows = _update_rows(c, n, p)
        q = rows.size
        A = Mc[rows, :q].T
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] <= 1e-13 * max(s[0], 1e-300):
            raise DesignError(f"moment system for wavelet {c} is singular", c)
        U[rows, c] = np.linalg.solve(A, target[c, :q])
        orders[c] = q
    U = U.tocsr()
    G = G0 - H_eo @ U.toarray()
    return DetailMatrices(G0, U, G, orders)


class WaveletFamily:
    """Wavelets psi_c(x) = sum_l G[l, c] phi_fine,eo_l(x) of one refinement level."""

    def __init__(self, fine: BrokenBasis, details: DetailMatrices, fine_eo):
        self.fine = fine
        self.details = details
        self.fine_eo = np.asarray(fine_eo)

    @property
    def size(self) -> int:
        return self.details.detail.shape[1]

    def evaluate(self, x, deriv: int = 0, side: str = "left"):
        V = self.fine.evaluate(x, deriv, side)
        return V[..., self.fine_eo] @ self.details.detail

    def __call__(self, x):
        return self.evaluate(x)

    def support(self, c: int):
        """Knot interval (left, right) of the fine grid containing the support of wavelet c."""
        rows = self.fine_eo[np.nonzero(self.details.detail[:, c])[0]]
        lo = min(self.fine.support(k)[0] for k in rows)
        hi = max(self.fine.support(k)[1] for k in rows)
        return self.fine.knots[lo], self.fine.knots[hi]


def wavelet_functions(fine: BrokenBasis, details: DetailMatrices, fine_eo=None) -> WaveletFamily:
    """Evaluable wavelets; ``fine_eo`` defaults to the interior fine indices."""
    if fine_eo is None:
        m = fine.order
        fine_eo = np.arange(-(-m // 2) - 1, fine.size - (m // 2 - 1))
    return WaveletFamily(fine, details, fine_eo)
