"""Fractional Brownian motion: covariance, exact sampling and the Wiener shift."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import GridFunction, PathGrid

__all__ = [
    "SamplePath",
    "FactorizationError",
    "fbm_covariance",
    "covariance_matrix",
    "sample_fbm",
    "wiener_shift",
]

MAX_CHOLESKY_NODES = 4096


class FactorizationError(RuntimeError):
    """The node covariance matrix could not be Cholesky-factorized."""


def _check_hurst(H: float) -> float:
    H = float(H)
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst parameter must lie in (0, 1), got H={H}")
    return H


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One scalar driver path ``omega`` on ``[0, n*h]`` with ``omega(0) = 0``."""

    grid: PathGrid
    values: np.ndarray
    seed: int | None = None
    hurst: float = 0.5

    def __post_init__(self) -> None:
        if self.grid.t0 != 0.0:
            raise ValueError(f"sample paths start at time 0, got t0={self.grid.t0}")
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape[0] != self.grid.size:
            raise ValueError(f"{v.shape[0]} values for a grid of {self.grid.size} nodes")
        if v[0] != 0.0:
            raise ValueError(f"sample paths must satisfy omega(0) = 0, got {v[0]!r}")
        _check_hurst(self.hurst)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def horizon(self) -> float:
        return self.grid.t_end

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def as_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values[:, None])

    def truncate(self, horizon: float) -> SamplePath:
        k = self.grid.index_of(horizon)
        return SamplePath(PathGrid(0.0, self.grid.h, k), self.values[: k + 1], self.seed, self.hurst)

    def coarsen(self, stride: int) -> SamplePath:
        return SamplePath(self.grid.coarsen(stride), self.values[::stride], self.seed, self.hurst)


def fbm_covariance(s, t, H: float):
    """``R_H(s, t) = (t^2H + s^2H - |t - s|^2H) / 2`` for ``s, t >= 0``."""
    H = _check_hurst(H)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("fbm_covariance is defined for nonnegative times only")
    two_h = 2.0 * H
    out = 0.5 * (t**two_h + s**two_h - np.abs(t - s) ** two_h)
    return float(out) if out.ndim == 0 else out


def covariance_matrix(times: np.ndarray, H: float) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return fbm_covariance(times[:, None], times[None, :], H)


@lru_cache(maxsize=16)
def _cholesky_factor(H: float, h: float, n: int) -> np.ndarray:
    times = h * np.arange(1, n + 1)
    cov = covariance_matrix(times, H)
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"fBm covariance is numerically not positive definite (n={n} nodes, H={H})"
        ) from exc
    factor.flags.writeable = False
    return factor


@lru_cache(maxsize=16)
def _circulant_scale(H: float, h: float, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    two_h = 2.0 * H
    acf = 0.5 * h**two_h * (np.abs(k + 1) ** two_h - 2.0 * k**two_h + np.abs(k - 1) ** two_h)
    eig = np.fft.fft(np.concatenate([acf, acf[-2:0:-1]])).real
    if eig.min() < -1e-10 * eig.max():
        raise FactorizationError(f"circulant embedding is not nonnegative definite (n={n} nodes, H={H})")
    scale = np.sqrt(np.clip(eig, 0.0, None) / (2 * n))
    scale.flags.writeable = False
    return scale


def _increments_circulant(H: float, h: float, n: int, rng: np.random.Generator) -> np.ndarray:
    scale = _circulant_scale(H, h, n)
    z = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
    return np.fft.fft(scale * z)[:n].real


def sample_fbm(H: float, grid: PathGrid, seed: int, method: str = "auto") -> SamplePath:
    """Draw an exact fBm path at the grid nodes.

    ``method="cholesky"`` factorizes the node covariance (cached per
    ``(H, h, n)``, so repeated draws cost one matrix-vector product each).
    ``method="circulant"`` embeds the increment covariance in a circulant
    matrix and samples by FFT; it is also exact in law and is what ``"auto"``
    picks above :data:`MAX_CHOLESKY_NODES` steps.
    """
    H = _check_hurst(H)
    if grid.t0 != 0.0:
        raise ValueError(f"fBm grids must start at 0, got t0={grid.t0}")
    if grid.n < 1:
        raise ValueError("fBm grids need at least one step")
    if method == "auto":
        method = "cholesky" if grid.n <= MAX_CHOLESKY_NODES else "circulant"
    rng = np.random.default_rng(seed)
    values = np.empty(grid.size)
    values[0] = 0.0
    if method == "cholesky":
        if grid.n > MAX_CHOLESKY_NODES:
            raise ValueError(f"Cholesky sampling is limited to n <= {MAX_CHOLESKY_NODES} steps, got {grid.n}")
        factor = _cholesky_factor(H, float(grid.h), int(grid.n))
        values[1:] = factor @ rng.standard_normal(grid.n)
    elif method == "circulant":
        values[1:] = np.cumsum(_increments_circulant(H, float(grid.h), int(grid.n), rng))
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return SamplePath(grid, values, seed, H)


def wiener_shift(omega: SamplePath, c: float) -> SamplePath:
    """``theta_c omega(s) = omega(c + s) - omega(c)`` on ``[0, T - c]``."""
    if c < 0:
        raise ValueError(f"shift must be nonnegative, got c={c}")
    k = omega.grid.steps(c, what="shift")
    if k > omega.grid.n:
        raise ValueError(f"shift c={c} exceeds the path horizon {omega.horizon}")
    tail = omega.values[k:]
    return SamplePath(PathGrid(0.0, omega.grid.h, omega.grid.n - k), tail - tail[0], omega.seed, omega.hurst)
