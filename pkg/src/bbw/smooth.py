"""Smooth building functions and the families they form.

A family is an ordered tuple of functions on [0, 1] whose values and
derivatives are known in closed form (or, for tabulated members, at the
knots of a fixed grid). Broken bases are welded from segments of these
functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, DomainError, SizeError

RCOND_TOL = 1e-10


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(np.isnan(x)):
        raise DomainError(f"points must lie in [0, 1], got {x[(x < 0) | (x > 1)][:3]}")
    return x


class SmoothFunction:
    """One member of a building family.

    Subclasses implement ``_derivative(x, order)`` for arrays ``x``.
    """

    analytic = True

    def derivative(self, x, order: int = 0):
        """Return the ``order``-th derivative at ``x`` (scalar or array)."""
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        xa = _check_domain(x)
        out = self._derivative(np.atleast_1d(xa), order)
        return out.reshape(xa.shape) if xa.ndim else float(out[0])

    def __call__(self, x):
        return self.derivative(x, 0)

    def _derivative(self, x, order):
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Power(SmoothFunction):
    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("power degree must be nonnegative")

    def _derivative(self, x, order):
        d = self.degree
        if order > d:
            return np.zeros_like(x)
        return math.perm(d, order) * x ** (d - order)

    def descriptor(self):
        return {"kind": "power", "degree": self.degree}


@dataclass(frozen=True)
class CenteredPower(SmoothFunction):
    degree: int
    center: float

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("power degree must be nonnegative")

    def _derivative(self, x, order):
        d = self.degree
        if order > d:
            return np.zeros_like(x)
        return math.perm(d, order) * (x - self.center) ** (d - order)

    def descriptor(self):
        return {"kind": "centered_power", "degree": self.degree, "center": self.center}


@dataclass(frozen=True)
class Sine(SmoothFunction):
    """sin(2*pi*freq*x)."""

    freq: float

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError("frequency must be positive")

    def _derivative(self, x, order):
        w = 2 * math.pi * self.freq
        return w**order * np.sin(w * x + order * math.pi / 2)

    def descriptor(self):
        return {"kind": "sin", "freq": self.freq}


@dataclass(frozen=True)
class Cosine(SmoothFunction):
    """cos(2*pi*freq*x)."""

    freq: float

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError("frequency must be positive")

    def _derivative(self, x, order):
        w = 2 * math.pi * self.freq
        return w**order * np.cos(w * x + order * math.pi / 2)

    def descriptor(self):
        return {"kind": "cos", "freq": self.freq}


@dataclass(frozen=True)
class Exponential(SmoothFunction):
    """exp(rate*x)."""

    rate: float

    def _derivative(self, x, order):
        return self.rate**order * np.exp(self.rate * x)

    def descriptor(self):
        return {"kind": "exp", "rate": self.rate}


@dataclass(frozen=True, eq=False)
class Tabulated(SmoothFunction):
    """Values and derivatives known only at the points of ``grid``.

    ``table[g, r]`` is the r-th derivative at ``grid[g]``.
    """

    grid: np.ndarray
    table: np.ndarray
    analytic = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        table = np.atleast_2d(np.asarray(self.table, dtype=float))
        if table.shape[0] != grid.size:
            raise SizeError("table needs one row per grid point")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "table", table)

    def _derivative(self, x, order):
        if order >= self.table.shape[1]:
            raise DomainError(f"derivative {order} not tabulated")
        idx = np.clip(np.searchsorted(self.grid, x), 0, self.grid.size - 1)
        for shift in (0, -1):
            cand = np.clip(idx + shift, 0, self.grid.size - 1)
            hit = np.isclose(self.grid[cand], x, rtol=0.0, atol=1e-13)
            idx = np.where(hit, cand, idx)
        if not np.all(np.isclose(self.grid[idx], x, rtol=0.0, atol=1e-13)):
            raise DomainError("tabulated function queried off its grid")
        return self.table[idx, order]

    def descriptor(self):
        return {"kind": "tabulated", "grid": self.grid.tolist(), "table": self.table.tolist()}


_KINDS = {
    "power": lambda d: Power(int(d["degree"])),
    "centered_power": lambda d: CenteredPower(int(d["degree"]), float(d["center"])),
    "sin": lambda d: Sine(float(d["freq"])),
    "cos": lambda d: Cosine(float(d["freq"])),
    "exp": lambda d: Exponential(float(d["rate"])),
    "tabulated": lambda d: Tabulated(d["grid"], d["table"]),
}


def function_from_descriptor(desc: dict) -> SmoothFunction:
    """Build a member from a JSON descriptor such as ``{"kind": "sin", "freq": 1}``."""
    try:
        make = _KINDS[desc["kind"]]
    except KeyError:
        raise ValueError(f"unknown function descriptor {desc!r}") from None
    try:
        return make(desc)
    except KeyError as exc:
        raise ValueError(f"descriptor {desc!r} lacks field {exc}") from None


@dataclass(frozen=True)
class SmoothFamily:
    """Ordered building set Omega(x) = [omega_0, ..., omega_{order-1}]."""

    members: tuple
    _poly_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if len(members) < 2:
            raise SizeError("a family needs at least two members (order >= 2)")
        for m in members:
            if not isinstance(m, SmoothFunction):
                raise TypeError(f"{m!r} is not a SmoothFunction")
            if isinstance(m, Tabulated) and m.table.shape[1] < len(members):
                raise SizeError("tabulated members need derivatives 0..order-1")
        powers = {m.degree: i for i, m in enumerate(members) if type(m) is Power}
        object.__setattr__(self, "_poly_index", powers)

    @classmethod
    def from_descriptors(cls, descs) -> "SmoothFamily":
        return cls(tuple(function_from_descriptor(d) for d in descs))

    @classmethod
    def powers(cls, order: int) -> "SmoothFamily":
        return cls(tuple(Power(d) for d in range(order)))

    @property
    def order(self) -> int:
        return len(self.members)

    @property
    def analytic(self) -> bool:
        return all(m.analytic for m in self.members)

    def descriptors(self) -> list:
        return [m.descriptor() for m in self.members]

    def starts_with_one_and_x(self) -> bool:
        m0, m1 = self.members[:2]
        return m0 == Power(0) and m1 == Power(1)

    def evaluate(self, x: float, max_deriv: int):
        """Matrix of derivatives at a single point.

        Entry ``(r, q)`` is the r-th derivative of member q at ``x``.
        """
        limit = 2 * self.order if self.analytic else self.order - 1
        if not 0 <= max_deriv <= limit:
            raise ValueError(f"max_deriv must lie in 0..{limit}")
        x = float(_check_domain(x))
        return np.array([[m.derivative(x, r) for m in self.members] for r in range(max_deriv + 1)])

    def values(self, x, deriv: int = 0):
        """Derivative ``deriv`` of every member at the points ``x``; shape (len(x), order)."""
        x = np.atleast_1d(_check_domain(x))
        return np.stack([m.derivative(x, deriv) for m in self.members], axis=-1)

    def localize(self, center: float) -> "SmoothFamily":
        """Re-center power members around ``center`` without changing the span.

        A member ``x**d`` becomes ``(x - center)**d`` when all lower powers
        are members too; every other member is kept. The constant stays first.
        """
        if not 0.0 <= center <= 1.0:
            raise DomainError("center must lie in [0, 1]")
        if center == 0.0:
            return self
        out = []
        for m in self.members:
            if self._localizable(m):
                out.append(CenteredPower(m.degree, center))
            else:
                out.append(m)
        return SmoothFamily(tuple(out))

    def _localizable(self, m) -> bool:
        return type(m) is Power and m.degree >= 1 and all(p in self._poly_index for p in range(m.degree))

    def localization_matrix(self, center: float):
        """Matrix T with ``localize(center).values(x) == values(x) @ T``."""
        T = np.eye(self.order)
        if center == 0.0:
            return T
        for j, m in enumerate(self.members):
            if self._localizable(m):
                T[:, j] = 0.0
                for p in range(m.degree + 1):
                    T[self._poly_index[p], j] = math.comb(m.degree, p) * (-center) ** (m.degree - p)
        return T

    def check_collocation(self, knots, tol: float = RCOND_TOL):
        """Raise ConditioningError if the local Wronskian is ill conditioned on some interval.

        On each interval the derivatives 0..order-1 of the localized family
        at the left knot, row r scaled by width**r, must have reciprocal
        1-norm condition above ``tol``.
        """
        knots = np.asarray(knots, dtype=float)
        for i in range(knots.size - 1):
            h = knots[i + 1] - knots[i]
            W = self.localize(knots[i]).evaluate(knots[i], self.order - 1)
            W = W * (h ** np.arange(self.order))[:, None]
            rcond = _rcond(W)
            if rcond < tol:
                raise ConditioningError(
                    f"family is nearly dependent on interval {i} (rcond {rcond:.2e})", interval=i
                )


def _rcond(M):
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.linalg.cond(M, 1)
    return 0.0 if not np.isfinite(c) else 1.0 / c


def closure_residual(family: SmoothFamily, alpha: float, beta: float, sample_count: int) -> float:
    """Relative least-squares residual of Omega(alpha*x + beta) ~ Omega(x) @ A.

    A residual near zero means the span of the family is closed under this
    dilation and translation. Only points with ``alpha*x + beta`` in [0, 1]
    are sampled.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if sample_count < 4 * family.order:
        raise ValueError("sample_count must be at least 4*order")
    lo = max(0.0, -beta / alpha)
    hi = min(1.0, (1.0 - beta) / alpha)
    if hi <= lo:
        raise DomainError("alpha*[0,1]+beta does not meet [0,1]")
    x = np.linspace(lo, hi, sample_count)
    y = np.clip(alpha * x + beta, 0.0, 1.0)
    design = family.values(x)
    target = family.values(y)
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] <= RCOND_TOL * sv[0]:
        raise ConditioningError("sample design matrix is rank deficient")
    A, *_ = np.linalg.lstsq(design, target, rcond=None)
    return float(np.linalg.norm(design @ A - target) / np.linalg.norm(target))
