"""Knot grids and nested even-odd hierarchies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeError


@dataclass(frozen=True, eq=False)
class KnotGrid:
    """Strictly increasing knots from 0 to 1."""

    knots: np.ndarray

    def __post_init__(self):
        x = np.array(self.knots, dtype=float).ravel()
        if x.size < 2:
            raise SizeError("a grid needs at least two knots")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise ValueError(f"grid must start at 0 and end at 1, got {x[0]} and {x[-1]}")
        dup = np.nonzero(np.diff(x) <= 0)[0]
        if dup.size:
            i = dup[0] + 1
            raise ValueError(f"knots must be strictly increasing; knot {i} = {x[i]!r} repeats or decreases")
        x.flags.writeable = False
        object.__setattr__(self, "knots", x)

    @property
    def count(self) -> int:
        return self.knots.size

    def __len__(self):
        return self.knots.size

    def __eq__(self, other):
        return isinstance(other, KnotGrid) and np.array_equal(self.knots, other.knots)

    def __hash__(self):
        return hash(self.knots.tobytes())

    def widths(self):
        return np.diff(self.knots)

    def refine(self, new_points=None) -> "KnotGrid":
        """Insert one knot strictly inside every interval (midpoints by default)."""
        x = self.knots
        if new_points is None:
            new = 0.5 * (x[:-1] + x[1:])
        else:
            new = np.asarray(new_points, dtype=float)
            if new.size != x.size - 1 or np.any(new <= x[:-1]) or np.any(new >= x[1:]):
                raise ValueError("need exactly one new point strictly inside each interval")
        fine = np.empty(2 * x.size - 1)
        fine[0::2] = x
        fine[1::2] = new
        return KnotGrid(fine)


@dataclass(frozen=True, eq=False)
class KnotHierarchy:
    """Nested grids, coarse (index 0) to fine (index L), with the even-odd rule.

    Level j knots are exactly the even-indexed knots of level j+1.
    """

    levels: tuple

    def __post_init__(self):
        levels = tuple(g if isinstance(g, KnotGrid) else KnotGrid(g) for g in self.levels)
        if not levels:
            raise SizeError("a hierarchy needs at least one grid")
        for j in range(len(levels) - 1):
            coarse, fine = levels[j].knots, levels[j + 1].knots
            if fine.size != 2 * coarse.size - 1 or not np.array_equal(fine[0::2], coarse):
                raise ValueError(f"level {j} is not the even subsample of level {j + 1}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_coarse(cls, coarse, levels: int, insertion: str = "midpoint") -> "KnotHierarchy":
        if insertion != "midpoint":
            raise ValueError(f"unknown insertion rule {insertion!r}")
        grids = [coarse if isinstance(coarse, KnotGrid) else KnotGrid(coarse)]
        for _ in range(levels):
            grids.append(grids[-1].refine())
        return cls(tuple(grids))

    @classmethod
    def random(cls, rng, n_coarse: int, levels: int, min_ratio: float = 0.2) -> "KnotHierarchy":
        """Random nonequispaced hierarchy built by subsampling a random fine grid.

        Every fine interval is at least ``min_ratio`` times the equispaced width.
        """
        n_fine = (n_coarse - 1) * 2**levels + 1
        w = min_ratio + rng.random(n_fine - 1)
        x = np.concatenate([[0.0], np.cumsum(w)])
        x /= x[-1]
        x[-1] = 1.0
        grids = [KnotGrid(x[:: 2 ** (levels - j)]) for j in range(levels + 1)]
        return cls(tuple(grids))

    @property
    def depth(self) -> int:
        """Number of refinement steps L."""
        return len(self.levels) - 1

    def __getitem__(self, j) -> KnotGrid:
        return self.levels[j]

    def __len__(self):
        return len(self.levels)

    def odd(self, j: int):
        """Indices of the knots of level j that are new with respect to level j-1."""
        return np.arange(1, self.levels[j].count, 2)

    def even(self, j: int):
        return np.arange(0, self.levels[j].count, 2)

    def selection(self, j: int):
        """0/1 matrix S with ``levels[j].knots == S.T @ levels[j+1].knots``."""
        n_c, n_f = self.levels[j].count, self.levels[j + 1].count
        S = np.zeros((n_f, n_c))
        S[2 * np.arange(n_c), np.arange(n_c)] = 1.0
        return S
