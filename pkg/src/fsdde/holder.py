"""Hoelder norms, windowed seminorms and the exponentially weighted norm.

Every supremum is an exact scan over grid-node pairs. For the piecewise
linear functions used throughout the package this is the true supremum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, PathGrid, as_grid_function

__all__ = [
    "MAX_EXACT_NODES",
    "PairBudgetError",
    "ResolutionWarning",
    "LittleHolderReport",
    "ConcatenationError",
    "sup_norm",
    "holder_seminorm",
    "holder_norm",
    "windowed_seminorm",
    "little_holder_diagnostic",
    "lambda_norm",
    "concatenate",
]

# exact O(N^2) pair scans are allowed up to this many grid steps
MAX_EXACT_NODES = 8192

SLOPE_THRESHOLD = 0.05


class PairBudgetError(ValueError):
    """An exact pair scan was requested on a grid above the budget."""


class ResolutionWarning(UserWarning):
    """The requested window is not wider than one grid step."""


class ConcatenationError(ValueError):
    pass


def _prepare(f, stride: int, budget: int = MAX_EXACT_NODES) -> tuple[np.ndarray, PathGrid]:
    f = as_grid_function(f)
    if f.grid.size == 0:
        raise ValueError("empty grid function")
    values, grid = f.values, f.grid
    if stride > 1:
        values = values[::stride]
        grid = PathGrid(grid.t0, grid.h * stride, (grid.size - 1) // stride)
    elif grid.n > budget:
        raise PairBudgetError(
            f"exact pair scan over {grid.n} steps exceeds the budget of {budget}; "
            "pass stride=k for a lower bound"
        )
    return values, grid


def _norms(diff: np.ndarray) -> np.ndarray:
    if diff.shape[1] == 1:
        return np.abs(diff[:, 0])
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _pair_sup(values: np.ndarray, h: float, beta: float, max_lag: int | None = None, weights=None) -> float:
    """``max_{i<j, j-i<=max_lag} w_j |v_j - v_i| / ((j-i) h)^beta``."""
    n = values.shape[0] - 1
    max_lag = n if max_lag is None else min(max_lag, n)
    best = 0.0
    for k in range(1, max_lag + 1):
        q = _norms(values[k:] - values[:-k])
        if weights is not None:
            q = q * weights[k:]
        m = q.max() / (k * h) ** beta
        if m > best:
            best = m
    return float(best)


def _check_beta(beta: float) -> float:
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"Hoelder exponent must lie in (0, 1], got {beta}")
    return float(beta)


def sup_norm(f) -> float:
    f = as_grid_function(f)
    if f.grid.size == 0:
        raise ValueError("empty grid function")
    return float(_norms(f.values).max())


def holder_seminorm(f, beta: float, stride: int = 1) -> float:
    """``sup_{s<t} |f(t) - f(s)| / (t - s)^beta`` over node pairs.

    With ``stride > 1`` only every ``stride``-th node enters the scan and the
    result is a lower bound.
    """
    beta = _check_beta(beta)
    values, grid = _prepare(f, stride)
    if grid.n == 0:
        warnings.warn("Hoelder seminorm of a single-node function is 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return _pair_sup(values, grid.h, beta)


def holder_norm(f, beta: float, stride: int = 1) -> float:
    """``sup|f| + [f]_beta``, the norm of C^beta."""
    return sup_norm(f) + holder_seminorm(f, beta, stride)


def _window_lags(grid: PathGrid, delta: float) -> int:
    # largest lag k with k*h < delta
    k = int(np.floor(delta / grid.h))
    if k * grid.h >= delta:
        k -= 1
    return k


def windowed_seminorm(f, beta: float, delta: float, stride: int = 1) -> float:
    """Hoelder quotient sup restricted to node pairs with ``0 < t - s < delta``.

    If ``delta`` does not exceed the grid step no pair qualifies; the result
    is 0 and a :class:`ResolutionWarning` is issued.
    """
    beta = _check_beta(beta)
    if not delta > 0:
        raise ValueError(f"window must be positive, got delta={delta}")
    values, grid = _prepare(f, stride)
    if delta <= grid.h:
        warnings.warn(f"window below resolution: delta={delta} <= h={grid.h}", ResolutionWarning, stacklevel=2)
        return 0.0
    return _pair_sup(values, grid.h, beta, max_lag=_window_lags(grid, delta))


def window_below_resolution(f, delta: float, stride: int = 1) -> bool:
    return delta <= as_grid_function(f).grid.h * stride


@dataclass
class LittleHolderReport:
    beta: float
    deltas: list[float]
    values: list[float]
    slope: float | None
    nonincreasing: bool
    status: str  # "consistent", "not_consistent" or "inconclusive"
    threshold: float = SLOPE_THRESHOLD
    notes: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.status == "consistent"


def little_holder_diagnostic(f, beta: float, deltas, threshold: float = SLOPE_THRESHOLD) -> LittleHolderReport:
    """Numerical surrogate for ``lim_{delta->0} [f]_{beta,delta} = 0``.

    Fits the least-squares slope of ``log value`` against ``log delta`` over
    the windows wider than one grid step. Membership is never claimed from
    fewer than three usable windows.
    """
    beta = _check_beta(beta)
    f = as_grid_function(f)
    deltas = sorted((float(d) for d in deltas), reverse=True)
    usable = [d for d in deltas if d > f.grid.h]
    notes = []
    if len(usable) < len(deltas):
        notes.append(f"dropped {len(deltas) - len(usable)} window(s) at or below the grid step")
    values = [windowed_seminorm(f, beta, d) for d in usable]
    nonincreasing = all(b <= a for a, b in zip(values, values[1:]))
    if len(usable) < 3:
        return LittleHolderReport(beta, usable, values, None, nonincreasing, "inconclusive", threshold, notes)
    if all(v == 0.0 for v in values):
        return LittleHolderReport(beta, usable, values, None, True, "consistent", threshold, notes)
    pos = [(d, v) for d, v in zip(usable, values) if v > 0.0]
    if len(pos) < 3:
        notes.append("fewer than three nonzero window values")
        return LittleHolderReport(beta, usable, values, None, nonincreasing, "inconclusive", threshold, notes)
    x = np.log([d for d, _ in pos])
    y = np.log([v for _, v in pos])
    slope = float(np.polyfit(x, y, 1)[0])
    status = "consistent" if (slope >= threshold and nonincreasing) else "not_consistent"
    return LittleHolderReport(beta, usable, values, slope, nonincreasing, status, threshold, notes)


def lambda_norm(f, beta: float, lam: float, stride: int = 1) -> float:
    """Exponentially weighted Hoelder norm.

    ``sup_t e^{-lam t}|f(t)| + sup_{s<t} e^{-lam t}|f(t) - f(s)| / (t - s)^beta``
    """
    beta = _check_beta(beta)
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    values, grid = _prepare(f, stride)
    weights = np.exp(-lam * grid.times)
    sup_part = float((_norms(values) * weights).max())
    if grid.n == 0:
        return sup_part
    return sup_part + _pair_sup(values, grid.h, beta, weights=weights)


def concatenate(eta: GridFunction, mu: GridFunction) -> GridFunction:
    """Join ``eta`` on ``[-r, 0]`` and ``mu`` on ``[0, T]`` into one function on ``[-r, T]``."""
    eta, mu = as_grid_function(eta), as_grid_function(mu)
    if not np.isclose(eta.grid.h, mu.grid.h, rtol=1e-12, atol=0.0):
        raise ConcatenationError(f"grid steps differ: {eta.grid.h} vs {mu.grid.h}")
    if abs(eta.grid.t_end) > 1e-9 * eta.grid.h or mu.grid.t0 != 0.0:
        raise ConcatenationError(
            f"expected eta to end and mu to start at 0, got {eta.grid.t_end} and {mu.grid.t0}"
        )
    if eta.dim != mu.dim:
        raise ConcatenationError(f"dimensions differ: {eta.dim} vs {mu.dim}")
    if not np.array_equal(eta.values[-1], mu.values[0]):
        raise ConcatenationError(f"endpoint mismatch: eta(0)={eta.values[-1].tolist()} mu(0)={mu.values[0].tolist()}")
    grid = PathGrid(eta.grid.t0, eta.grid.h, eta.grid.n + mu.grid.n)
    return GridFunction(grid, np.vstack([eta.values, mu.values[1:]]))
