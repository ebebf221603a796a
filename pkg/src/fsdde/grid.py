"""Uniform time grids and vector-valued functions sampled on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative slack when mapping a time onto a node index
_ALIGN_RTOL = 1e-9


class GridAlignmentError(ValueError):
    """A time or offset does not fall on a grid node."""


@dataclass(frozen=True)
class PathGrid:
    """Uniform grid ``t0 + k*h`` for ``k = 0..n``."""

    t0: float
    h: float
    n: int

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError(f"grid step must be positive, got h={self.h}")
        if self.n < 0:
            raise ValueError(f"grid must have n >= 0 steps, got n={self.n}")

    @classmethod
    def over(cls, t0: float, t1: float, n: int) -> PathGrid:
        return cls(float(t0), (t1 - t0) / n, int(n))

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def t_end(self) -> float:
        return self.t0 + self.n * self.h

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n + 1)

    def steps(self, span: float, what: str = "offset") -> int:
        """Number of grid steps in ``span``; rejects spans that are not multiples of h."""
        k = round(span / self.h)
        if abs(span - k * self.h) > _ALIGN_RTOL * max(self.h, abs(span)):
            raise GridAlignmentError(f"{what} {span!r} is not a multiple of the grid step {self.h!r}")
        return int(k)

    def index_of(self, t: float) -> int:
        k = self.steps(t - self.t0, what=f"time {t!r} (from t0={self.t0!r})")
        if not 0 <= k <= self.n:
            raise GridAlignmentError(f"time {t!r} lies outside [{self.t0!r}, {self.t_end!r}]")
        return k

    def sub(self, i0: int, i1: int) -> PathGrid:
        """Grid of nodes ``i0..i1`` (inclusive)."""
        return PathGrid(self.t0 + i0 * self.h, self.h, i1 - i0)

    def coarsen(self, stride: int) -> PathGrid:
        if self.n % stride:
            raise GridAlignmentError(f"stride {stride} does not divide n={self.n}")
        return PathGrid(self.t0, self.h * stride, self.n // stride)


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function ``[t0, t0 + n*h] -> R^d`` known at the grid nodes.

    ``values`` has shape ``(n + 1, d)``. Between nodes the function is taken
    to be piecewise linear.
    """

    grid: PathGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.size:
            raise ValueError(f"values of shape {np.shape(self.values)} do not match a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_callable(cls, grid: PathGrid, fn, dim: int | None = None) -> GridFunction:
        v = np.asarray([fn(t) for t in grid.times], dtype=float)
        if dim is not None:
            v = v.reshape(grid.size, dim)
        return cls(grid, v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def at(self, t: float) -> np.ndarray:
        return self.values[self.grid.index_of(t)]

    def restrict(self, a: float, b: float) -> GridFunction:
        i0, i1 = self.grid.index_of(a), self.grid.index_of(b)
        return GridFunction(self.grid.sub(i0, i1), self.values[i0 : i1 + 1])

    def shifted(self, c: float) -> GridFunction:
        """Same values on the grid translated by ``-c``, i.e. ``s -> f(s + c)``."""
        return GridFunction(PathGrid(self.grid.t0 - c, self.grid.h, self.grid.n), self.values)

    def coarsen(self, stride: int) -> GridFunction:
        return GridFunction(self.grid.coarsen(stride), self.values[::stride])

    def __sub__(self, other: GridFunction) -> GridFunction:
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values - other.values)

    def __add__(self, other: GridFunction) -> GridFunction:
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values + other.values)

    def scale(self, c: float) -> GridFunction:
        return GridFunction(self.grid, c * self.values)


def _check_same_grid(g1: PathGrid, g2: PathGrid) -> None:
    if g1.n != g2.n or not np.isclose(g1.h, g2.h, rtol=1e-12, atol=0) or abs(g1.t0 - g2.t0) > _ALIGN_RTOL * g1.h:
        raise GridAlignmentError(f"grids differ: {g1} vs {g2}")


def as_grid_function(f) -> GridFunction:
    """Accept a GridFunction or anything exposing ``grid`` and 1-d ``values`` (a sample path)."""
    if isinstance(f, GridFunction):
        return f
    return GridFunction(f.grid, np.asarray(f.values, dtype=float)[:, None])


def same_grid(g1: PathGrid, g2: PathGrid) -> None:
    _check_same_grid(g1, g2)
