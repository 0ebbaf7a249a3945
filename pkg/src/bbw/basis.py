"""Broken bases: compactly supported functions welded from segments of a smooth family.

On a grid with ``n`` knots and a family of order ``m`` the basis has
``n + m - 2`` functions. Function ``k`` lives on the intervals
``i`` in ``S_k = {0..n-2} & {k-m+1..k}`` and on each of them equals
``Omega(x) @ a[k, i]``. The segment coefficients follow from one square
sparse linear system: continuity of derivatives ``0..m-2`` at interior
knots, clamped boundary behavior, and the normalization
``sum_k phi_k = omega_0``.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PPoly
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from .errors import ConditioningError, DomainError, InconsistencyError, SizeError
from .knots import KnotGrid
from .smooth import RCOND_TOL, SmoothFamily, SmoothFunction, _check_domain

SOLVE_TOL = 1e-9
MIN_KNOTS = 3
# The assembled system is worse conditioned than the local collocation
# matrices; the per-equation residual test is the accuracy guard.
SYSTEM_RCOND_TOL = 1e-13


def support_intervals(k: int, n: int, m: int) -> range:
    """Index set S_k: intervals on which basis function k may be nonzero."""
    return range(max(0, k - m + 1), min(n - 2, k) + 1)


def gauss_legendre(a: float, b: float, npts: int):
    """Gauss-Legendre nodes and weights on [a, b]."""
    t, w = leggauss(npts)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w


class BrokenBasis:
    """Broken basis on one grid. Build it with :func:`build_basis`.

    Internally each interval ``i`` carries the localized family
    ``family.localize(x_i)`` and the coefficients ``local_coeffs[i, t]`` of
    function ``k = i + t`` in that local family.
    """

    def __init__(self, family, grid, local_families, local_coeffs):
        self.family = family
        self.grid = grid
        self.local_families = tuple(local_families)
        self.local_coeffs = local_coeffs
        self.local_coeffs.flags.writeable = False
        m, x = self.order, grid.knots
        # segment endpoint data: [interval, slot, derivative order]
        left = np.empty_like(local_coeffs)
        right = np.empty_like(local_coeffs)
        for i, fam in enumerate(self.local_families):
            left[i] = local_coeffs[i] @ fam.evaluate(x[i], m - 1).T
            right[i] = local_coeffs[i] @ fam.evaluate(x[i + 1], m - 1).T
        self._seg_left = left
        self._seg_right = right

    @property
    def order(self) -> int:
        return self.family.order

    @property
    def knots(self):
        return self.grid.knots

    @property
    def n_knots(self) -> int:
        return self.grid.count

    @property
    def size(self) -> int:
        """Number of basis functions, n + m - 2."""
        return self.grid.count + self.order - 2

    def support(self, k: int):
        """Knot indices (l, r) bounding the support of function k."""
        S = support_intervals(k, self.n_knots, self.order)
        return S[0], S[-1] + 1

    @cached_property
    def localization(self):
        return np.array([self.family.localization_matrix(c) for c in self.knots[:-1]])

    @cached_property
    def global_coeffs(self):
        """Segment coefficients in the original family; shape (interval, slot, member)."""
        return np.einsum("iqp,itp->itq", self.localization, self.local_coeffs)

    @property
    def segment_coeffs(self) -> dict:
        """``{k: {i: a_{k,i}}}`` in coordinates of the original family."""
        g = self.global_coeffs
        out = {}
        for i in range(self.n_knots - 1):
            for t in range(self.order):
                out.setdefault(i + t, {})[i] = g[i, t].copy()
        return out

    # ------------------------------------------------------------------ evaluation

    def _interval(self, x, side):
        n = self.n_knots
        idx = np.searchsorted(self.knots, x, side=side) - 1
        return np.clip(idx, 0, n - 2)

    def evaluate(self, x, deriv: int = 0, side: str = "left"):
        """Derivative ``deriv`` of every basis function at ``x``.

        At an interior knot ``side`` picks the one-sided limit; the two sides
        agree for ``deriv <= m-2``. Returns shape (len(x), size), or (size,)
        for scalar input. Families with tabulated members are evaluated
        through the Hermite surrogate.
        """
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        limit = 2 * self.order if self.family.analytic else self.order - 1
        if not 0 <= deriv <= limit:
            raise ValueError(f"deriv must lie in 0..{limit}")
        xa = _check_domain(x)
        pts = np.atleast_1d(xa)
        ivl = self._interval(pts, side)
        out = np.zeros((pts.size, self.size))
        m = self.order
        for i in np.unique(ivl):
            sel = ivl == i
            if self.family.analytic:
                vals = self.local_families[i].values(pts[sel], deriv) @ self.local_coeffs[i].T
            else:
                vals = _horner(self._surrogate_coeffs[i], pts[sel] - self.knots[i], deriv)
            out[np.ix_(sel, range(i, i + m))] = vals
        return out if xa.ndim else out[0]

    def __call__(self, x):
        return self.evaluate(x)

    def knot_data(self, p: int, side: str):
        """One-sided derivatives 0..m-1 of all functions at knot ``p``; shape (size, m).

        ``side='left'`` is the limit from interval p-1, ``'right'`` from interval p.
        Outside [0, 1] the functions are zero.
        """
        m, n = self.order, self.n_knots
        out = np.zeros((self.size, m))
        if side == "left" and p > 0:
            out[p - 1 : p - 1 + m] = self._seg_right[p - 1]
        elif side == "right" and p < n - 1:
            out[p : p + m] = self._seg_left[p]
        return out

    # ------------------------------------------------------------------ Hermite surrogate

    @cached_property
    def _surrogate_coeffs(self):
        """Ascending coefficients in (x - x_i) per interval; shape (interval, 2m, slot)."""
        m, x = self.order, self.knots
        out = np.empty((self.n_knots - 1, 2 * m, m))
        for i in range(self.n_knots - 1):
            out[i] = hermite_coeffs(self._seg_left[i].T, self._seg_right[i].T, x[i + 1] - x[i])
        return out

    # ------------------------------------------------------------------ expansion matrix

    @cached_property
    def expansion(self):
        """Matrix A with ``Omega(x) = Phi(x) @ A``; rows averaged over overlapping intervals."""
        m = self.order
        acc = np.zeros((self.size, m))
        cnt = np.zeros(self.size)
        for i in range(self.n_knots - 1):
            B = self.global_coeffs[i].T
            try:
                lu = scipy.linalg.lu_factor(B, check_finite=True)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise ConditioningError(f"singular segment matrix on interval {i}", interval=i) from exc
            if np.min(np.abs(np.diag(lu[0]))) <= RCOND_TOL * np.max(np.abs(lu[0])):
                raise ConditioningError(f"singular segment matrix on interval {i}", interval=i)
            acc[i : i + m] += scipy.linalg.lu_solve(lu, np.eye(m))
            cnt[i : i + m] += 1
        return acc / cnt[:, None]

    # ------------------------------------------------------------------ serialization

    def to_dict(self) -> dict:
        coeffs = {
            str(k): {str(i): v.tolist() for i, v in segs.items()} for k, segs in self.segment_coeffs.items()
        }
        return {"order": self.order, "knots": self.knots.tolist(), "coeffs": coeffs}

    @classmethod
    def from_dict(cls, data: dict, family: SmoothFamily) -> "BrokenBasis":
        grid = KnotGrid(data["knots"])
        m = family.order
        if int(data["order"]) != m:
            raise SizeError("order in data does not match the family")
        n = grid.count
        glob = np.zeros((n - 1, m, m))
        for k, segs in data["coeffs"].items():
            for i, v in segs.items():
                glob[int(i), int(k) - int(i)] = v
        locs = [family.localize(c) for c in grid.knots[:-1]]
        T = np.array([family.localization_matrix(c) for c in grid.knots[:-1]])
        local = np.array([np.linalg.solve(T[i], glob[i].T).T for i in range(n - 1)])
        return cls(family, grid, locs, local)


def _horner(coef, dx, deriv):
    """Evaluate ascending polynomial coefficients ``coef`` (deg+1, ncols) at ``dx``."""
    deg = coef.shape[0] - 1
    if deriv > deg:
        return np.zeros((dx.size, coef.shape[1]))
    c = coef[deriv:] * np.array([math.perm(p, deriv) for p in range(deriv, deg + 1)])[:, None]
    out = np.zeros((dx.size, coef.shape[1]))
    for row in c[::-1]:
        out = out * dx[:, None] + row
    return out


def hermite_coeffs(left, right, h):
    """Coefficients of the degree 2m-1 Hermite interpolant on an interval of width ``h``.

    ``left[r]`` and ``right[r]`` hold the r-th derivatives at the two ends
    (shape (m, ncols)). Returns ascending coefficients in the offset from
    the left end, shape (2m, ncols).
    """
    m = left.shape[0]
    V = _hermite_matrix(m)
    scale = h ** np.arange(m)[:, None]
    data = np.vstack([left * scale, right * scale])
    c = np.linalg.solve(V, data)
    return c / (h ** np.arange(2 * m))[:, None]


def _hermite_matrix(m):
    V = np.zeros((2 * m, 2 * m))
    for r in range(m):
        V[r, r] = math.factorial(r)
        for p in range(r, 2 * m):
            V[m + r, p] = math.perm(p, r)
    return V


# ---------------------------------------------------------------------- construction


def build_basis(family: SmoothFamily, grid) -> BrokenBasis:
    """Solve the segment coefficients of the broken basis on ``grid``.

    Unknowns ``a[i, t, q]`` (interval i, function k = i + t, local member q)
    number (n-1)*m**2. Equations:

    * per interval, ``sum_t a[i, t] = e_0`` (normalization, m rows);
    * per interior knot p and order r <= m-2, continuity of each function
      touching p, except the one starting at p (implied by the others and
      the normalization);
    * at x=0, ``d^r phi_k = 0`` for r < k (mirrored at x=1).

    Raises:
        SizeError: if the grid has fewer than three knots.
        ConditioningError: if the family or the system is ill conditioned.
    """
    if not isinstance(grid, KnotGrid):
        grid = KnotGrid(grid)
    m, n, x = family.order, grid.count, grid.knots
    if n < MIN_KNOTS:
        raise SizeError(f"a broken basis needs at least {MIN_KNOTS} knots, got {n}")
    family.check_collocation(x)

    locs = [family.localize(c) for c in x[:-1]]

    def data(i, at):
        return locs[i].evaluate(x[at], m - 1)

    def unk(i, t):
        return (i * m + t) * m

    rows, cols, vals, rhs = [], [], [], []
    eq = 0

    def add(entries, b=0.0):
        nonlocal eq
        for c, v in entries:
            rows.append(eq)
            cols.append(c)
            vals.append(v)
        rhs.append(b)
        eq += 1

    for i in range(n - 1):
        for q in range(m):
            add([(unk(i, t) + q, 1.0) for t in range(m)], 1.0 if q == 0 else 0.0)

    h = np.diff(x)
    for p in range(1, n - 1):
        hs = 0.5 * (h[p - 1] + h[p])
        DL = data(p - 1, p) * (hs ** np.arange(m))[:, None]
        DR = data(p, p) * (hs ** np.arange(m))[:, None]
        for k in range(p - 1, p + m - 1):
            tl, tr = k - (p - 1), k - p
            for r in range(m - 1):
                entries = [(unk(p - 1, tl) + q, DL[r, q]) for q in range(m)]
                if tr >= 0:
                    entries += [(unk(p, tr) + q, -DR[r, q]) for q in range(m)]
                add(entries)

    D0 = data(0, 0) * (h[0] ** np.arange(m))[:, None]
    DN = data(n - 2, n - 1) * (h[-1] ** np.arange(m))[:, None]
    for k in range(1, m):
        for r in range(min(k, m - 1)):
            add([(unk(0, k) + q, D0[r, q]) for q in range(m)])
            add([(unk(n - 2, m - 1 - k) + q, DN[r, q]) for q in range(m)])

    nunk = (n - 1) * m * m
    if eq != nunk:
        raise InconsistencyError(f"assembled {eq} equations for {nunk} unknowns")

    A = sp.csc_array((vals, (rows, cols)), shape=(eq, nunk))
    b = np.asarray(rhs)
    colscale = 1.0 / np.maximum(abs(A).max(axis=0).toarray().ravel(), np.finfo(float).tiny)
    As = (A @ sp.diags_array(colscale)).tocsc()
    try:
        lu = splu(As)
    except RuntimeError as exc:
        raise ConditioningError("broken basis system is singular") from exc
    inv = LinearOperator(As.shape, matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"), dtype=float)
    rcond = 1.0 / (onenormest(As) * onenormest(inv))
    if not rcond > SYSTEM_RCOND_TOL:
        raise ConditioningError(f"broken basis system is ill conditioned (rcond {rcond:.2e})")
    sol = lu.solve(b) * colscale

    resid = np.abs(A @ sol - b)
    scale = abs(A) @ np.abs(sol) + np.abs(b)
    if np.any(resid > SOLVE_TOL * np.maximum(scale, 1.0)):
        bad = int(np.argmax(resid / np.maximum(scale, 1.0)))
        raise ConditioningError(f"basis solve residual too large at equation {bad}")

    return BrokenBasis(family, grid, locs, sol.reshape(n - 1, m, m))


# ---------------------------------------------------------------------- surrogate, moments, projection


def hermite_surrogate(basis: BrokenBasis) -> PPoly:
    """Piecewise Hermite interpolant of every basis function (degree 2m-1 per interval).

    Returns a :class:`scipy.interpolate.PPoly` whose trailing axis runs over
    the basis functions.
    """
    m, n = basis.order, basis.n_knots
    c = np.zeros((2 * m, n - 1, basis.size))
    for i in range(n - 1):
        c[:, i, i : i + m] = basis._surrogate_coeffs[i][::-1]
    return PPoly(c, basis.knots, extrapolate=False)


def family_surrogate(family: SmoothFamily, knots) -> PPoly:
    """Piecewise Hermite interpolant of each family member from its knot data."""
    x = np.asarray(knots, dtype=float)
    m = family.order
    data = np.array([family.evaluate(xi, m - 1) for xi in x])
    c = np.zeros((2 * m, x.size - 1, m))
    for i in range(x.size - 1):
        c[:, i, :] = hermite_coeffs(data[i], data[i + 1], x[i + 1] - x[i])[::-1]
    return PPoly(c, x, extrapolate=False)


class MomentTable:
    """Moments ``entries[k, i, q]`` of basis function k over interval i against x**q."""

    def __init__(self, entries):
        self.entries = entries

    @property
    def max_q(self) -> int:
        return self.entries.shape[2] - 1

    def totals(self):
        """Moments over [0, 1]; shape (size, max_q+1)."""
        return self.entries.sum(axis=1)


def moments(basis: BrokenBasis, max_q: int | None = None) -> MomentTable:
    """Moments of the Hermite surrogates by Gauss-Legendre quadrature, exact for it."""
    m = basis.order
    if max_q is None:
        max_q = m - 1
    if max_q < 0:
        raise ValueError("max_q must be nonnegative")
    npts = math.ceil((2 * m + max_q) / 2)
    x = basis.knots
    M = np.zeros((basis.size, basis.n_knots - 1, max_q + 1))
    for i in range(basis.n_knots - 1):
        nodes, w = gauss_legendre(x[i], x[i + 1], npts)
        vals = _horner(basis._surrogate_coeffs[i], nodes - x[i], 0)
        powers = nodes[:, None] ** np.arange(max_q + 1)
        M[i : i + m, i, :] = np.einsum("n,nt,nq->tq", w, vals, powers)
    return MomentTable(M)


def quadrature_moments(basis: BrokenBasis, max_q: int | None = None):
    """Total moments of the basis functions themselves; shape (size, max_q+1).

    Analytic families are integrated with 2m+8 Gauss points per interval,
    tabulated ones through the surrogate (exact).
    """
    if max_q is None:
        max_q = basis.order - 1
    nodes, w, ivl = _quadrature_rule(basis)
    V = _values_at_nodes(basis, nodes, ivl)
    return (V * w[:, None]).T @ (nodes[:, None] ** np.arange(max_q + 1))


def _quadrature_rule(basis, npts=None):
    m, x = basis.order, basis.knots
    if npts is None:
        npts = 2 * m if not basis.family.analytic else 2 * m + 8
    nodes, weights, ivl = [], [], []
    for i in range(basis.n_knots - 1):
        t, w = gauss_legendre(x[i], x[i + 1], npts)
        nodes.append(t)
        weights.append(w)
        ivl.append(np.full(npts, i))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(ivl)


def _values_at_nodes(basis, nodes, ivl):
    m = basis.order
    out = np.zeros((nodes.size, basis.size))
    for i in range(basis.n_knots - 1):
        sel = ivl == i
        if basis.family.analytic:
            v = basis.local_families[i].values(nodes[sel]) @ basis.local_coeffs[i].T
        else:
            v = _horner(basis._surrogate_coeffs[i], nodes[sel] - basis.knots[i], 0)
        out[np.ix_(sel, range(i, i + m))] = v
    return out


def gram_matrix(basis: BrokenBasis):
    """Symmetric positive definite matrix of inner products on [0, 1].

    Analytic families are integrated with 2m+8 Gauss points per interval;
    tabulated ones through the surrogate (2m points, exact).
    """
    nodes, w, ivl = _quadrature_rule(basis)
    V = _values_at_nodes(basis, nodes, ivl)
    G = (V * w[:, None]).T @ V
    G = 0.5 * (G + G.T)
    k = np.arange(basis.size)
    G[np.abs(k[:, None] - k[None, :]) >= basis.order] = 0.0
    return G


def project(basis: BrokenBasis, target, sample_grid=None):
    """Orthogonal L2 projection of ``target`` onto the span of the basis.

    ``target`` is a SmoothFunction or any vectorized callable on [0, 1].
    Returns the coefficients and the error ``target - Phi @ coeffs`` at the
    points of ``sample_grid`` (empty if not given).
    """
    f = target.derivative if isinstance(target, SmoothFunction) else target
    nodes, w, ivl = _quadrature_rule(basis)
    V = _values_at_nodes(basis, nodes, ivl)
    rhs = V.T @ (w * np.asarray(f(nodes), dtype=float))
    G = gram_matrix(basis)
    try:
        coeffs = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), rhs)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("Gram matrix is not positive definite") from exc
    if sample_grid is None:
        return coeffs, np.empty(0)
    xs = np.asarray(sample_grid, dtype=float)
    err = np.asarray(f(xs), dtype=float) - basis.evaluate(xs) @ coeffs
    return coeffs, err


def expansion_matrix(basis: BrokenBasis):
    return basis.expansion


def evaluate_basis(basis: BrokenBasis, x, deriv: int = 0):
    if np.any(np.asarray(x) < 0) or np.any(np.asarray(x) > 1):
        raise DomainError("x outside [0, 1]")
    return basis.evaluate(x, deriv)
