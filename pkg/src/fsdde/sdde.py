"""Fractional stochastic delay equations and their Picard solver.

The equation is solved in integral form

    X(t) = eta(0) + int_0^t F(X_s) ds + int_0^t G(X_s) d omega(s),   X_0 = eta,

by iterating the map ``U`` on paths over ``[-r, T]``. The drift integral uses
the trapezoid rule and the noise integral left-point Young sums; both run as
cumulative sums, so one application of ``U`` is O(N).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fbm import SamplePath
from .fractional import IntegralMethod, check_order, w_1malpha_inf_norm, young_integral
from .grid import GridAlignmentError, GridFunction, PathGrid, as_grid_function
from .holder import holder_norm, lambda_norm

__all__ = [
    "Kind",
    "CoefficientFunctional",
    "DelaySystem",
    "Segment",
    "SolverConfig",
    "Solution",
    "SolverError",
    "AuditWarning",
    "segment_at",
    "drift_integral",
    "diffusion_integral",
    "drift_path",
    "diffusion_path",
    "picard_map",
    "solve",
    "empirical_contraction",
    "omega_lipschitz_ratio",
    "constant_extension",
]

# max |d/dz sech(z)^2|
_SECH2_SLOPE = 4.0 / (3.0 * math.sqrt(3.0))


class Kind(enum.Enum):
    CONST = "const"
    LINEAR_COMBO = "linear"
    POINT_EVAL = "point"
    BOUNDED_SMOOTH = "tanh"


@dataclass(frozen=True)
class CoefficientFunctional:
    """A built-in coefficient ``C([-r, 0], R^d) -> R^d``.

    * ``CONST``: ``c``
    * ``LINEAR_COMBO``: ``a xi(0) + b xi(-r) + c``
    * ``POINT_EVAL``: ``xi(u0)``
    * ``BOUNDED_SMOOTH``: ``s tanh(a xi(0) + b xi(-r) + c)``

    Coefficients act componentwise; ``c`` may be a scalar or a length-d vector.
    """

    kind: Kind
    a: float = 0.0
    b: float = 0.0
    c: float | tuple[float, ...] = 0.0
    s: float = 1.0
    u0: float = 0.0

    @classmethod
    def const(cls, c=0.0) -> CoefficientFunctional:
        return cls(Kind.CONST, c=_as_coeff(c))

    @classmethod
    def linear(cls, a=0.0, b=0.0, c=0.0) -> CoefficientFunctional:
        return cls(Kind.LINEAR_COMBO, a=float(a), b=float(b), c=_as_coeff(c))

    @classmethod
    def point(cls, u0: float) -> CoefficientFunctional:
        if u0 > 0:
            raise ValueError(f"evaluation point must lie in [-r, 0], got {u0}")
        return cls(Kind.POINT_EVAL, u0=float(u0))

    @classmethod
    def bounded_smooth(cls, s=1.0, a=0.0, b=0.0, c=0.0) -> CoefficientFunctional:
        return cls(Kind.BOUNDED_SMOOTH, a=float(a), b=float(b), c=_as_coeff(c), s=float(s))

    @property
    def is_zero(self) -> bool:
        return self.kind is Kind.CONST and not np.any(np.asarray(self.c))

    @property
    def constants(self) -> dict[str, float]:
        """Lipschitz / growth constants ``L1, L2`` (as a drift) and ``L3, L4`` (as a diffusion)."""
        cmax = float(np.max(np.abs(self.c)))
        if self.kind is Kind.CONST:
            return {"L1": 0.0, "L2": cmax, "L3": 0.0, "L4": 0.0}
        if self.kind is Kind.LINEAR_COMBO:
            lip = abs(self.a) + abs(self.b)
            return {"L1": lip, "L2": max(lip, cmax), "L3": lip, "L4": 0.0}
        if self.kind is Kind.POINT_EVAL:
            return {"L1": 1.0, "L2": 1.0, "L3": 1.0, "L4": 0.0}
        lip = abs(self.a) + abs(self.b)
        return {
            "L1": abs(self.s) * lip,
            "L2": abs(self.s),
            "L3": abs(self.s) * lip,
            "L4": abs(self.s) * lip**2 * _SECH2_SLOPE,
        }

    def _offsets(self, r_steps: int, h: float) -> tuple[int, int]:
        if self.kind is Kind.POINT_EVAL:
            k = PathGrid(0.0, h, r_steps).steps(-self.u0, what="evaluation point")
            if k > r_steps:
                raise GridAlignmentError(f"evaluation point {self.u0} lies before -r")
            return k, 0
        return 0, r_steps

    def evaluate(self, now: np.ndarray, delayed: np.ndarray) -> np.ndarray:
        if self.kind is Kind.CONST:
            return np.broadcast_to(np.asarray(self.c, dtype=float), now.shape).copy()
        if self.kind is Kind.POINT_EVAL:
            return now.copy()
        z = self.a * now + self.b * delayed + np.asarray(self.c, dtype=float)
        if self.kind is Kind.LINEAR_COMBO:
            return z
        return self.s * np.tanh(z)

    def along(self, x: np.ndarray, r_steps: int, h: float, start: int) -> np.ndarray:
        """Values ``F(x_s)`` for every node ``s`` from index ``start`` on.

        ``x`` holds a path on ``[-r, T]`` and ``start`` is the index of time 0.
        """
        first, second = self._offsets(r_steps, h)
        idx = np.arange(start, x.shape[0])
        return self.evaluate(x[idx - first], x[idx - second])

    def __call__(self, segment: GridFunction) -> np.ndarray:
        seg = as_grid_function(segment)
        out = self.along(seg.values, seg.grid.n, seg.grid.h, seg.grid.n)
        return out[0]


def _as_coeff(c):
    arr = np.atleast_1d(np.asarray(c, dtype=float))
    return float(arr[0]) if arr.size == 1 else tuple(float(x) for x in arr)


@dataclass(frozen=True)
class DelaySystem:
    r: float
    d: int
    F: CoefficientFunctional
    G: CoefficientFunctional

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"delay must be positive, got r={self.r}")
        if self.d < 1:
            raise ValueError(f"state dimension must be >= 1, got d={self.d}")
        for name, coeff in (("drift", self.F), ("diffusion", self.G)):
            c = np.atleast_1d(coeff.c)
            if c.size not in (1, self.d):
                raise ValueError(f"{name} offset has {c.size} components for a {self.d}-dimensional state")
            if coeff.kind is Kind.POINT_EVAL and not -self.r <= coeff.u0 <= 0:
                raise ValueError(f"{name} evaluation point {coeff.u0} lies outside [-r, 0]")

    @property
    def is_zero(self) -> bool:
        return self.F.is_zero and self.G.is_zero

    @property
    def constants(self) -> dict[str, float]:
        f, g = self.F.constants, self.G.constants
        return {"L1": f["L1"], "L2": f["L2"], "L3": g["L3"], "L4": g["L4"]}


@dataclass(frozen=True)
class Segment:
    """``X_t(.) = X(t + .)`` re-based onto ``[-r, 0]``."""

    t: float
    function: GridFunction

    @property
    def values(self) -> np.ndarray:
        return self.function.values

    @property
    def grid(self) -> PathGrid:
        return self.function.grid


def segment_at(x: GridFunction, t: float, r: float) -> Segment:
    x = as_grid_function(x)
    r_steps = x.grid.steps(r, what="delay")
    j = x.grid.index_of(t)
    if j < r_steps:
        raise ValueError(f"segment at t={t} needs history back to {t - r}, path starts at {x.grid.t0}")
    grid = PathGrid(-r_steps * x.grid.h, x.grid.h, r_steps)
    return Segment(t, GridFunction(grid, x.values[j - r_steps : j + 1]))


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.35
    h: float | None = None
    tol: float = 1e-9
    max_iter: int = 500
    lambda0: float = 1.0
    lambda_factor: float = 4.0
    max_escalations: int = 8
    contraction_target: float = 0.9
    audit_checkpoints: int = 8
    audit_rtol: float = 5e-2

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.contraction_target < 1:
            raise ValueError("contraction_target must lie in (0, 1)")
        if self.lambda0 < 0 or self.lambda_factor <= 1:
            raise ValueError("lambda schedule needs lambda0 >= 0 and a factor > 1")


@dataclass
class Solution:
    path: GridFunction
    iterations: int
    final_residual: float
    contraction_estimate: float
    lambda_used: float
    tol: float
    r: float
    residuals: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    escalations: int = 0
    audit: list[dict] = field(default_factory=list)

    def segment(self, t: float) -> Segment:
        return segment_at(self.path, t, self.r)

    def diagnostics(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "tol": self.tol,
            "contraction_estimate": self.contraction_estimate,
            "lambda_used": self.lambda_used,
            "escalations": self.escalations,
            "residuals": self.residuals,
            "ratios": self.ratios,
            "audit": self.audit,
        }


class SolverError(RuntimeError):
    def __init__(self, message: str, residuals: list[float], ratios: list[float]):
        super().__init__(message)
        self.residuals = residuals
        self.ratios = ratios
        self.last_residual = residuals[-1] if residuals else math.nan


class AuditWarning(UserWarning):
    """The fractional-formula audit of the noise integral disagreed with the Young sums."""


# -- the integral operators --------------------------------------------------


def _layout(x: GridFunction, r: float) -> tuple[int, int]:
    """(steps in the delay, index of time 0) for a path on [-r, T]."""
    r_steps = x.grid.steps(r, what="delay")
    start = x.grid.steps(-x.grid.t0, what="history length")
    if start != r_steps:
        raise ValueError(f"path must start at -r={-r}, starts at {x.grid.t0}")
    return r_steps, start


def _drift_cumulative(x: np.ndarray, F: CoefficientFunctional, r_steps: int, h: float, start: int) -> np.ndarray:
    vals = F.along(x, r_steps, h, start)
    out = np.zeros_like(vals)
    np.cumsum(0.5 * h * (vals[1:] + vals[:-1]), axis=0, out=out[1:])
    return out


def _diffusion_cumulative(x: np.ndarray, G: CoefficientFunctional, omega: np.ndarray, r_steps: int, h: float,
                          start: int) -> np.ndarray:
    vals = G.along(x, r_steps, h, start)
    out = np.zeros_like(vals)
    np.cumsum(vals[:-1] * np.diff(omega)[:, None], axis=0, out=out[1:])
    return out


def _driver_values(omega: SamplePath, grid: PathGrid, start: int) -> np.ndarray:
    if not np.isclose(omega.grid.h, grid.h, rtol=1e-12, atol=0.0):
        raise GridAlignmentError(f"driver step {omega.grid.h} differs from path step {grid.h}")
    n_future = grid.n - start
    if n_future > omega.grid.n:
        raise ValueError(f"driver horizon {omega.horizon} is shorter than the path horizon {grid.t_end}")
    return omega.values[: n_future + 1]


def drift_integral(x: GridFunction, F: CoefficientFunctional, t: float, r: float) -> np.ndarray:
    """``int_0^t F(x_s) ds`` by the trapezoid rule."""
    x = as_grid_function(x)
    r_steps, start = _layout(x, r)
    k = x.grid.index_of(t) - start
    if k < 0:
        raise ValueError(f"t={t} must be nonnegative")
    return _drift_cumulative(x.values[: start + k + 1], F, r_steps, x.grid.h, start)[k]


def diffusion_integral(x: GridFunction, G: CoefficientFunctional, omega: SamplePath, t: float, r: float,
                       alpha: float | None = None,
                       method: IntegralMethod = IntegralMethod.YOUNG_SUMS) -> np.ndarray:
    """``int_0^t G(x_s) d omega(s)``; Young sums by default, the fractional formula for audits."""
    x = as_grid_function(x)
    r_steps, start = _layout(x, r)
    k = x.grid.index_of(t) - start
    if k < 0:
        raise ValueError(f"t={t} must be nonnegative")
    if k == 0:
        return np.zeros(x.dim)
    if method is IntegralMethod.YOUNG_SUMS:
        w = _driver_values(omega, x.grid.sub(0, start + k), start)
        return _diffusion_cumulative(x.values[: start + k + 1], G, w, r_steps, x.grid.h, start)[k]
    integrand = GridFunction(PathGrid(0.0, x.grid.h, x.grid.n - start),
                             G.along(x.values, r_steps, x.grid.h, start))
    return young_integral(integrand, omega, 0.0, t, alpha, method)


def drift_path(x: GridFunction, F: CoefficientFunctional, r: float) -> GridFunction:
    """``t -> int_0^t F(x_s) ds`` at every node of ``[0, T]``."""
    x = as_grid_function(x)
    r_steps, start = _layout(x, r)
    grid = PathGrid(0.0, x.grid.h, x.grid.n - start)
    return GridFunction(grid, _drift_cumulative(x.values, F, r_steps, x.grid.h, start))


def diffusion_path(x: GridFunction, G: CoefficientFunctional, omega: SamplePath, r: float) -> GridFunction:
    """``t -> int_0^t G(x_s) d omega(s)`` (Young sums) at every node of ``[0, T]``."""
    x = as_grid_function(x)
    r_steps, start = _layout(x, r)
    w = _driver_values(omega, x.grid, start)
    grid = PathGrid(0.0, x.grid.h, x.grid.n - start)
    return GridFunction(grid, _diffusion_cumulative(x.values, G, w, r_steps, x.grid.h, start))


def _apply(f: np.ndarray, eta0: np.ndarray, sys: DelaySystem, w: np.ndarray, r_steps: int, h: float,
           start: int) -> np.ndarray:
    out = f.copy()
    future = eta0 + _drift_cumulative(f, sys.F, r_steps, h, start)
    if not sys.G.is_zero:
        future += _diffusion_cumulative(f, sys.G, w, r_steps, h, start)
    out[start:] = future
    return out


def _check_history(f: GridFunction, eta: GridFunction, start: int) -> None:
    if eta.grid.n != start or not np.isclose(eta.grid.h, f.grid.h, rtol=1e-12, atol=0.0):
        raise ValueError(f"initial segment grid {eta.grid} does not match the path history {f.grid.sub(0, start)}")
    if not np.array_equal(f.values[: start + 1], eta.values):
        raise ValueError("path does not agree with the initial segment on [-r, 0]")


def picard_map(f: GridFunction, eta: GridFunction, omega: SamplePath, sys: DelaySystem) -> GridFunction:
    """``U(f)``: ``eta`` on ``[-r, 0]`` and ``eta(0) + I(f) + J(f)`` on ``[0, T]``."""
    f, eta = as_grid_function(f), as_grid_function(eta)
    r_steps, start = _layout(f, sys.r)
    _check_history(f, eta, start)
    w = _driver_values(omega, f.grid, start)
    return GridFunction(f.grid, _apply(f.values, eta.values[-1], sys, w, r_steps, f.grid.h, start))


def constant_extension(eta: GridFunction, horizon: float) -> GridFunction:
    """``eta`` on ``[-r, 0]`` continued by the constant ``eta(0)`` up to ``horizon``."""
    eta = as_grid_function(eta)
    n_future = PathGrid(0.0, eta.grid.h, 0).steps(horizon, what="horizon")
    grid = PathGrid(eta.grid.t0, eta.grid.h, eta.grid.n + n_future)
    return GridFunction(grid, np.vstack([eta.values, np.repeat(eta.values[-1:], n_future, axis=0)]))


def _future_lambda_norm(diff: np.ndarray, grid: PathGrid, start: int, beta: float, lam: float) -> float:
    # differences of U-images vanish on [-r, 0]; pairs reaching into the history are dominated by (0, t)
    return lambda_norm(GridFunction(grid.sub(start, grid.n), diff[start:]), beta, lam)


def _validate(sys: DelaySystem, eta: GridFunction, omega: SamplePath, cfg: SolverConfig) -> float:
    check_order(cfg.alpha, omega.hurst)
    if cfg.h is not None and not np.isclose(cfg.h, omega.grid.h, rtol=1e-12, atol=0.0):
        raise ValueError(f"configured step {cfg.h} differs from the driver step {omega.grid.h}")
    if eta.dim != sys.d:
        raise ValueError(f"initial segment has dimension {eta.dim}, system has {sys.d}")
    r_steps = PathGrid(0.0, omega.grid.h, 0).steps(sys.r, what="delay")
    if eta.grid.n != r_steps or abs(eta.grid.t_end) > 1e-9 * eta.grid.h:
        raise ValueError(f"initial segment must live on [-r, 0] = [{-sys.r}, 0] with step {omega.grid.h}")
    beta = 1.0 - cfg.alpha
    return cfg.tol * (1.0 + holder_norm(eta, beta))


def solve(sys: DelaySystem, eta: GridFunction, omega: SamplePath, cfg: SolverConfig | None = None,
          horizon: float | None = None, initial: GridFunction | None = None) -> Solution:
    """Picard fixed-point solve on ``[-r, horizon]``.

    Iterates ``U`` from the constant extension of ``eta`` until successive
    iterates differ by at most ``tol * (1 + |eta|_{1-alpha})`` in the
    lambda-weighted norm. Whenever the empirical contraction ratio exceeds
    ``contraction_target`` the weight lambda is multiplied by
    ``lambda_factor`` (at most ``max_escalations`` times); the iterates do
    not depend on lambda, so only the ratio bookkeeping restarts.
    """
    cfg = cfg or SolverConfig()
    eta = as_grid_function(eta)
    tol = _validate(sys, eta, omega, cfg)
    horizon = omega.horizon if horizon is None else horizon
    f = constant_extension(eta, horizon) if initial is None else as_grid_function(initial)
    r_steps, start = _layout(f, sys.r)
    _check_history(f, eta, start)
    grid, h = f.grid, f.grid.h
    w = _driver_values(omega, grid, start)
    beta = 1.0 - cfg.alpha
    eta0 = eta.values[-1]

    lam = cfg.lambda0
    escalations = 0
    residuals: list[float] = []
    ratios: list[float] = []
    ratios_at_lam: list[float] = []
    first = f.values
    cur = _apply(first, eta0, sys, w, r_steps, h, start)
    iterations = 1
    prev_res = None
    while True:
        nxt = _apply(cur, eta0, sys, w, r_steps, h, start)
        iterations += 1
        res = _future_lambda_norm(nxt - cur, grid, start, beta, lam)
        residuals.append(res)
        if prev_res is not None and prev_res > 0:
            ratio = res / prev_res
            ratios.append(ratio)
            ratios_at_lam.append(ratio)
            if ratio > cfg.contraction_target and escalations < cfg.max_escalations and res > tol:
                lam *= cfg.lambda_factor
                escalations += 1
                ratios_at_lam = []
                res = _future_lambda_norm(nxt - cur, grid, start, beta, lam)
                residuals[-1] = res
        if res <= tol:
            break
        if iterations >= cfg.max_iter:
            raise SolverError(
                f"Picard iteration did not reach tol={tol:.3g} within {cfg.max_iter} iterations "
                f"(last residual {res:.3g}, lambda={lam})",
                residuals,
                ratios,
            )
        prev_res = res
        cur = nxt

    path = GridFunction(grid, cur)
    if ratios_at_lam:
        k_est = max(ratios_at_lam)
    else:
        k_est = _fallback_contraction(path, first, eta, omega, sys, beta, lam, start)
    sol = Solution(path, iterations, res, k_est, lam, tol, sys.r, residuals, ratios, escalations)
    if cfg.audit_checkpoints and not sys.G.is_zero:
        sol.audit = _audit(sol, sys, omega, cfg)
    return sol


def _fallback_contraction(path, first, eta, omega, sys, beta, lam, start) -> float:
    """Contraction estimate when the iteration stopped before two residuals were available."""
    if np.array_equal(path.values, first):
        return 0.0
    return empirical_contraction(path, GridFunction(path.grid, first), eta, omega, sys, 1.0 - beta, lam)


def _audit(sol: Solution, sys: DelaySystem, omega: SamplePath, cfg: SolverConfig) -> list[dict]:
    """Compare the Young-sum noise integral with the fractional formula at a few checkpoints."""
    path = sol.path
    r_steps, start = _layout(path, sys.r)
    n_future = path.grid.n - start
    if n_future < 2:
        return []
    ks = sorted({max(1, round(n_future * (i + 1) / cfg.audit_checkpoints)) for i in range(cfg.audit_checkpoints)})
    integrand = GridFunction(PathGrid(0.0, path.grid.h, n_future),
                             sys.G.along(path.values, r_steps, path.grid.h, start))
    w = omega.truncate(n_future * path.grid.h) if omega.grid.n > n_future else omega
    young = _diffusion_cumulative(path.values, sys.G, w.values, r_steps, path.grid.h, start)
    scale = max(float(np.abs(young).max()), 1e-300)
    out = []
    for k in ks:
        t = k * path.grid.h
        frac = young_integral(integrand, w, 0.0, t, cfg.alpha, IntegralMethod.FRACTIONAL_FORMULA, refine=1)
        gap = float(np.linalg.norm(frac - young[k]))
        ok = gap <= cfg.audit_rtol * max(float(np.linalg.norm(young[k])), scale)
        out.append({"t": t, "young": young[k].tolist(), "fractional": frac.tolist(), "ok": ok})
        if not ok:
            warnings.warn(f"noise integral audit at t={t}: Young {young[k]} vs fractional {frac}", AuditWarning,
                          stacklevel=3)
    return out


def empirical_contraction(f: GridFunction, g: GridFunction, eta: GridFunction, omega: SamplePath,
                          sys: DelaySystem, alpha: float, lam: float) -> float:
    """``|U(f) - U(g)|_lam / |f - g|_lam`` in the lambda-weighted (1 - alpha)-Hoelder norm."""
    f, g = as_grid_function(f), as_grid_function(g)
    diff = lambda_norm(f - g, 1.0 - alpha, lam)
    if diff == 0.0:
        raise ValueError("contraction ratio needs f != g")
    uf, ug = picard_map(f, eta, omega, sys), picard_map(g, eta, omega, sys)
    return lambda_norm(uf - ug, 1.0 - alpha, lam) / diff


def omega_lipschitz_ratio(f: GridFunction, eta: GridFunction, omega1: SamplePath, omega2: SamplePath,
                          sys: DelaySystem, alpha: float, lam: float, stride: int = 1) -> float:
    """``|U_{w1}(f) - U_{w2}(f)|_lam / |w1 - w2|_{1-alpha,inf,T}``."""
    if omega1.grid != omega2.grid:
        raise GridAlignmentError("driver paths must share a grid")
    dw = GridFunction(omega1.grid, omega1.values - omega2.values)
    denom = w_1malpha_inf_norm(dw, alpha, stride=stride)
    if denom == 0.0:
        raise ValueError("Lipschitz ratio needs omega1 != omega2")
    num = lambda_norm(picard_map(f, eta, omega1, sys) - picard_map(f, eta, omega2, sys), 1.0 - alpha, lam)
    return num / denom
