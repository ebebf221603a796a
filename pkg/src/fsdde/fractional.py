"""Weyl fractional derivatives and the pathwise (Young / Zaehle) integral.

Singular integrals are evaluated by product integration: the integrand's
smooth factor is replaced by its piecewise-linear interpolant on the grid and
integrated exactly against the power kernel. All kernels reduce to unit-cell
moments of ``y**p`` against the two halves of a hat function, which are
tabulated once per ``(n, p)``.

The integral follows the real-valued sign convention

    int_a^b f dw = - int_a^b D^alpha_{a+} f(s) * D^{1-alpha}_{b-} w_{b-}(s) ds

where both derivatives are the real expressions without the formal complex
factors. The sign is pinned by ``f = 1`` returning ``w(b) - w(a)``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from math import gamma as _gamma

from .fbm import SamplePath, wiener_shift
from .grid import GridAlignmentError, GridFunction, PathGrid, as_grid_function
from .holder import PairBudgetError

__all__ = [
    "IntegralMethod",
    "MethodDisagreement",
    "RoughnessWarning",
    "NormReport",
    "BoundReport",
    "MAX_EXACT_PAIR_NODES",
    "check_order",
    "frac_deriv_left",
    "frac_deriv_right",
    "left_derivative_profile",
    "right_derivative_profile",
    "young_integral",
    "young_integral_path",
    "cross_validate",
    "lambda_alpha",
    "w_alpha1_norm",
    "w_1malpha_inf_norm",
    "weyl_norms",
    "integral_bound_check",
    "shift_integral_identity_check",
]

# exact Lambda_alpha / W^{1-alpha,inf} pair scans are allowed up to this many steps
MAX_EXACT_PAIR_NODES = 1024


class IntegralMethod(enum.Enum):
    FRACTIONAL_FORMULA = "fractional"
    YOUNG_SUMS = "young"


class MethodDisagreement(ArithmeticError):
    def __init__(self, fractional, young, tol):
        self.fractional = np.asarray(fractional)
        self.young = np.asarray(young)
        self.tol = tol
        super().__init__(
            f"fractional formula {self.fractional.tolist()} and Young sums {self.young.tolist()} "
            f"disagree beyond {tol}"
        )


class RoughnessWarning(UserWarning):
    """Partial sums of a singular integral grow toward fine scales."""


def check_order(alpha: float, hurst: float | None = None) -> float:
    """Validate a fractional order; with ``hurst`` also require ``1 - H < alpha < 1/2``."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got alpha={alpha}")
    if hurst is not None and not (1.0 - hurst < alpha < 0.5):
        raise ValueError(f"alpha={alpha} is outside (1 - H, 1/2) = ({1.0 - hurst}, 0.5) for H={hurst}")
    return alpha


# -- product-integration weights -------------------------------------------


@lru_cache(maxsize=64)
def _cell_split(n: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Moments of ``y**p`` over unit cells ``[k, k+1]``, ``k < n``, split between the cell's two hats.

    Returns ``(to_left, to_right)``: the weight each cell gives to its node
    ``k`` and node ``k + 1``. For ``p <= -1`` the node-0 weight is infinite and
    must never be used.
    """
    k = np.arange(n, dtype=float)
    k1 = k + 1.0
    i1 = (k1 ** (p + 2) - k ** (p + 2)) / (p + 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        i0 = (k1 ** (p + 1) - k ** (p + 1)) / (p + 1)
        to_right = i1 - k * i0
        to_left = k1 * i0 - i1
    to_right[0] = i1[0]
    to_left.flags.writeable = False
    to_right.flags.writeable = False
    return to_left, to_right


@lru_cache(maxsize=64)
def _marchaud_weights(n: int, gamma_: float) -> tuple[np.ndarray, np.ndarray]:
    """Hat weights of the kernel ``y**(-1-gamma)`` at distances ``m = 0..n``.

    ``full[m]`` is used for interior nodes and ``end[m]`` for the far end of a
    window of length ``m``. Index 0 is a zero placeholder.
    """
    to_left, to_right = _cell_split(n + 1, -1.0 - gamma_)
    full = np.zeros(n + 1)
    end = np.zeros(n + 1)
    full[1:] = to_right[:n] + to_left[1 : n + 1]
    end[1:] = to_right[:n]
    full.flags.writeable = False
    end.flags.writeable = False
    return full, end


@lru_cache(maxsize=64)
def _outer_weights(n: int, p: float) -> np.ndarray:
    """Hat weights of ``y**p`` (``p > -1``) on ``[0, n]``, nodes ``0..n``."""
    to_left, to_right = _cell_split(n, p)
    w = np.zeros(n + 1)
    w[:-1] += to_left
    w[1:] += to_right
    w.flags.writeable = False
    return w


def _marchaud_all(g: np.ndarray, gamma_: float) -> np.ndarray:
    """``Q_j = int_0^j (g_j - g(j - y)) y^{-1-gamma} dy`` on unit spacing, for ``j = 1..K``.

    ``g`` has shape ``(K + 1, d)`` and ``g[0]`` is the anchor end of every window.
    """
    K = g.shape[0] - 1
    full, end = _marchaud_weights(K, gamma_)
    j = np.arange(1, K + 1)
    csum = np.concatenate([[0.0], np.cumsum(full[1:K])])
    totals = csum[j - 1] + end[j]
    out = np.empty((K, g.shape[1]))
    for c in range(g.shape[1]):
        col = g[:, c]
        shifted = col.copy()
        shifted[0] = 0.0
        conv = np.convolve(full, shifted)[1 : K + 1]
        out[:, c] = col[1:] * totals - conv - end[j] * col[0]
    return out


def _marchaud_at(g: np.ndarray, gamma_: float) -> tuple[np.ndarray, np.ndarray]:
    """``Q`` at the last node of ``g`` plus the per-distance contributions."""
    M = g.shape[0] - 1
    full, end = _marchaud_weights(M, gamma_)
    diffs = g[-1] - g[::-1][1:]  # g_M - g_{M-m}, m = 1..M
    w = full[1:].copy()
    w[-1] = end[M]
    contrib = w[:, None] * diffs
    return contrib.sum(axis=0), np.linalg.norm(contrib, axis=1)


def _grows_toward_fine_scales(contrib: np.ndarray, shells: int = 4) -> bool:
    """True when dyadic shell sums increase strictly toward the smallest distances."""
    sums = []
    lo = 0
    while lo < contrib.shape[0] and len(sums) < shells:
        hi = 2 * lo + 1
        sums.append(float(np.sum(contrib[lo:hi])))
        lo = hi
    if len(sums) < shells:
        return False
    return all(a > b for a, b in zip(sums, sums[1:]))


# -- fractional derivatives --------------------------------------------------


def _common_indices(f_grid: PathGrid, w_grid: PathGrid, a: float, b: float) -> tuple[int, int, int, int]:
    if not np.isclose(f_grid.h, w_grid.h, rtol=1e-12, atol=0.0):
        raise GridAlignmentError(f"integrand and driver use different steps: {f_grid.h} vs {w_grid.h}")
    return f_grid.index_of(a), f_grid.index_of(b), w_grid.index_of(a), w_grid.index_of(b)


def frac_deriv_left(f, alpha: float, a: float, s: float) -> np.ndarray:
    """``D^alpha_{a+} f(s)``.

    ``(1/Gamma(1-alpha)) [f(s)/(s-a)^alpha + alpha int_a^s (f(s)-f(u))/(s-u)^{1+alpha} du]``
    """
    alpha = check_order(alpha)
    f = as_grid_function(f)
    if not s > a:
        raise ValueError(f"left derivative needs s > a, got a={a}, s={s}")
    i, j = f.grid.index_of(a), f.grid.index_of(s)
    h = f.grid.h
    g = f.values[i : j + 1]
    q, contrib = _marchaud_at(g, alpha)
    if _grows_toward_fine_scales(contrib):
        warnings.warn(f"integrand looks rougher than alpha={alpha} near s={s}", RoughnessWarning, stacklevel=2)
    return (g[-1] / ((j - i) * h) ** alpha + alpha * h**-alpha * q) / _gamma(1.0 - alpha)


def frac_deriv_right(omega, alpha: float, t: float, s: float) -> float:
    """``D^{1-alpha}_{t-} omega_{t-}(s)`` with ``omega_{t-}(s) = omega(s) - omega(t)``.

    ``(1/Gamma(alpha)) [omega_{t-}(s)/(t-s)^{1-alpha}
    + (1-alpha) int_s^t (omega(s)-omega(u))/(u-s)^{2-alpha} du]``
    """
    alpha = check_order(alpha)
    w = as_grid_function(omega)
    if not t > s:
        raise ValueError(f"right derivative needs s < t, got s={s}, t={t}")
    i, j = w.grid.index_of(s), w.grid.index_of(t)
    h = w.grid.h
    v = w.values[i : j + 1][::-1]  # v[0] = omega(t), v[-1] = omega(s)
    q, _ = _marchaud_at(v, 1.0 - alpha)
    val = ((v[-1] - v[0]) / ((j - i) * h) ** (1.0 - alpha) + (1.0 - alpha) * h ** (alpha - 1.0) * q) / _gamma(alpha)
    return float(val[0]) if val.shape == (1,) else val


def left_derivative_profile(g: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """``D^alpha_{a+} f`` at every node after the anchor ``a`` (local values ``g``, shape ``(K+1, d)``)."""
    K = g.shape[0] - 1
    j = np.arange(1, K + 1)
    q = _marchaud_all(g, alpha)
    return (g[1:] / ((j * h) ** alpha)[:, None] + alpha * h**-alpha * q) / _gamma(1.0 - alpha)


def right_derivative_profile(w: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """``D^{1-alpha}_{b-} w_{b-}`` at nodes ``0..K-1`` of the window, ``b`` being node ``K``."""
    v = w[::-1].reshape(-1, 1)
    K = v.shape[0] - 1
    M = np.arange(1, K + 1)
    q = _marchaud_all(v, 1.0 - alpha)[:, 0]
    d = ((v[1:, 0] - v[0, 0]) / (M * h) ** (1.0 - alpha) + (1.0 - alpha) * h ** (alpha - 1.0) * q) / _gamma(alpha)
    return d[::-1]


# -- the integral ------------------------------------------------------------


def _refine(values: np.ndarray, q: int) -> np.ndarray:
    if q == 1:
        return values
    n = values.shape[0] - 1
    x = np.arange(n * q + 1) / q
    return np.stack([np.interp(x, np.arange(n + 1), values[:, c]) for c in range(values.shape[1])], axis=1)


def _fractional_formula(g: np.ndarray, w: np.ndarray, h: float, alpha: float) -> np.ndarray:
    K = g.shape[0] - 1
    left = left_derivative_profile(g, h, alpha)
    # (s - a)^alpha D^alpha f(s) stays bounded; its value at s = a is f(a)/Gamma(1-alpha)
    bracket = np.empty_like(g)
    bracket[0] = g[0] / _gamma(1.0 - alpha)
    bracket[1:] = left * ((np.arange(1, K + 1) * h) ** alpha)[:, None]
    right = np.zeros(K + 1)
    right[:K] = right_derivative_profile(w, h, alpha)
    weights = _outer_weights(K, -alpha) * h ** (1.0 - alpha)
    return -(weights * right) @ bracket


def young_integral(f, omega: SamplePath, a: float, b: float, alpha: float | None = None,
                   method: IntegralMethod = IntegralMethod.YOUNG_SUMS, refine: int = 4) -> np.ndarray:
    """``int_a^b f d omega`` for a grid function ``f`` and a driver on the same step.

    ``YOUNG_SUMS`` are left-point Riemann-Stieltjes sums. ``FRACTIONAL_FORMULA``
    evaluates the fractional integration-by-parts representation; ``refine``
    subdivides each cell (linear interpolation) for the outer quadrature.
    """
    f = as_grid_function(f)
    if not b > a:
        raise ValueError(f"integral needs a < b, got a={a}, b={b}")
    fi, fj, wi, wj = _common_indices(f.grid, omega.grid, a, b)
    g = f.values[fi : fj + 1]
    w = omega.values[wi : wj + 1]
    if method is IntegralMethod.YOUNG_SUMS:
        return np.diff(w) @ g[:-1]
    if method is IntegralMethod.FRACTIONAL_FORMULA:
        if alpha is None:
            raise ValueError("the fractional formula needs an order alpha")
        alpha = check_order(alpha)
        q = int(refine)
        return _fractional_formula(_refine(g, q), _refine(w[:, None], q)[:, 0], f.grid.h / q, alpha)
    raise ValueError(f"unknown integration method {method!r}")


def young_integral_path(f, omega: SamplePath, a: float = 0.0) -> GridFunction:
    """Cumulative left-point sums ``t -> int_a^t f d omega`` at every node from ``a`` on."""
    f = as_grid_function(f)
    t_end = min(f.grid.t_end, omega.grid.t_end)
    fi, fj, wi, wj = _common_indices(f.grid, omega.grid, a, t_end)
    incr = f.values[fi:fj] * np.diff(omega.values[wi : wj + 1])[:, None]
    out = np.zeros((fj - fi + 1, f.dim))
    np.cumsum(incr, axis=0, out=out[1:])
    return GridFunction(PathGrid(a, f.grid.h, fj - fi), out)


def cross_validate(f, omega: SamplePath, a: float, b: float, alpha: float, rtol: float = 1e-2,
                   scale: float | None = None, refine: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Both integral methods; raises :class:`MethodDisagreement` beyond ``rtol``.

    The disagreement is measured relative to ``max(|young|, scale)``.
    """
    ff = young_integral(f, omega, a, b, alpha, IntegralMethod.FRACTIONAL_FORMULA, refine=refine)
    ys = young_integral(f, omega, a, b, alpha, IntegralMethod.YOUNG_SUMS)
    denom = max(float(np.linalg.norm(ys)), scale or 0.0)
    if denom == 0.0:
        denom = 1.0
    if np.linalg.norm(ff - ys) > rtol * denom:
        raise MethodDisagreement(ff, ys, rtol)
    return ff, ys


# -- Weyl-type norms ---------------------------------------------------------


def _pair_arrays(g, stride: int) -> tuple[np.ndarray, float]:
    g = as_grid_function(g)
    values, h, n = g.values, g.grid.h, g.grid.n
    if stride > 1:
        values = values[::stride]
        h *= stride
        n = values.shape[0] - 1
    elif n > MAX_EXACT_PAIR_NODES:
        raise PairBudgetError(
            f"exact pair scan over {n} steps exceeds the budget of {MAX_EXACT_PAIR_NODES}; "
            "pass stride=k for a lower bound"
        )
    return values, h


def _right_pair_scan(values: np.ndarray, h: float, alpha: float, signed: bool, absolute: bool):
    """Sup over node pairs ``s < t`` of ``|D^{1-alpha}_{t-} g_{t-}(s)|`` and of the W^{1-alpha,inf} quotient."""
    n = values.shape[0] - 1
    full, end = _marchaud_weights(n, 1.0 - alpha)
    kern = h ** (alpha - 1.0)
    best_signed = 0.0
    best_abs = 0.0
    for i in range(n):
        d = values[i + 1 :] - values[i]  # g(u) - g(s), u = s + m h
        L = d.shape[0]
        M = np.arange(1, L + 1)
        gap = (M * h) ** (1.0 - alpha)
        if signed:
            ds = d[:, 0]
            cum = np.concatenate([[0.0], np.cumsum(full[1:L] * ds[:-1])])
            # omega(s) - omega(u) = -d
            val = (-ds / gap - (1.0 - alpha) * kern * (cum + end[1 : L + 1] * ds)) / _gamma(alpha)
            best_signed = max(best_signed, float(np.abs(val).max()))
        if absolute:
            nd = np.abs(d[:, 0]) if d.shape[1] == 1 else np.linalg.norm(d, axis=1)
            cum = np.concatenate([[0.0], np.cumsum(full[1:L] * nd[:-1])])
            val = nd / gap + kern * (cum + end[1 : L + 1] * nd)
            best_abs = max(best_abs, float(val.max()))
    return best_signed, best_abs


@dataclass
class NormReport:
    alpha: float
    w_alpha1: float
    w_1ma_inf: float
    lambda_alpha: float
    lower_bound: bool = False

    @property
    def chain_holds(self) -> bool:
        return self.lambda_alpha <= self.w_1ma_inf / (_gamma(1.0 - self.alpha) * _gamma(self.alpha))


def lambda_alpha(omega, alpha: float, stride: int = 1) -> float:
    """``(1/Gamma(1-alpha)) sup_{s<t} |D^{1-alpha}_{t-} omega_{t-}(s)|`` over node pairs."""
    alpha = check_order(alpha)
    values, h = _pair_arrays(omega, stride)
    if values.shape[1] != 1:
        raise ValueError("Lambda_alpha is defined for scalar drivers")
    s, _ = _right_pair_scan(values, h, alpha, signed=True, absolute=False)
    return s / _gamma(1.0 - alpha)


def w_1malpha_inf_norm(g, alpha: float, stride: int = 1) -> float:
    """``sup_{s<t} (|g(t)-g(s)|/(t-s)^{1-alpha} + int_s^t |g(u)-g(s)|/(u-s)^{2-alpha} du)``."""
    alpha = check_order(alpha)
    values, h = _pair_arrays(g, stride)
    _, a = _right_pair_scan(values, h, alpha, signed=False, absolute=True)
    return a


def w_alpha1_norm(f, alpha: float) -> float:
    """``int_0^T (|f(s)|/s^alpha + int_0^s |f(s)-f(u)|/(s-u)^{1+alpha} du) ds``."""
    alpha = check_order(alpha)
    f = as_grid_function(f)
    if f.grid.t0 != 0.0:
        raise ValueError(f"W^(alpha,1)_0 norms are taken on [0, T], got t0={f.grid.t0}")
    n, h = f.grid.n, f.grid.h
    if n == 0:
        return 0.0
    v = f.values
    full, end = _marchaud_weights(n, alpha)
    inner = np.zeros(n + 1)
    lag_totals = np.zeros(n)
    for m in range(1, n + 1):
        d = v[m:] - v[:-m]
        q = np.abs(d[:, 0]) if d.shape[1] == 1 else np.linalg.norm(d, axis=1)
        inner[m] += end[m] * q[0]
        inner[m + 1 :] += full[m] * q[1:]
        lag_totals[m - 1] = full[m] * q[1:].sum() + end[m] * q[0]
    inner *= h**-alpha
    if _grows_toward_fine_scales(lag_totals):
        warnings.warn(f"W^(alpha,1) partial sums grow toward fine scales (alpha={alpha})", RoughnessWarning,
                      stacklevel=2)
    node_norms = np.abs(v[:, 0]) if v.shape[1] == 1 else np.linalg.norm(v, axis=1)
    singular = float(_outer_weights(n, -alpha) @ node_norms) * h ** (1.0 - alpha)
    return singular + float(np.trapezoid(inner, dx=h))


def weyl_norms(f, omega, alpha: float, stride: int = 1) -> NormReport:
    alpha = check_order(alpha)
    values, h = _pair_arrays(omega, stride)
    lam, w = _right_pair_scan(values, h, alpha, signed=True, absolute=True)
    return NormReport(alpha, w_alpha1_norm(f, alpha), w, lam / _gamma(1.0 - alpha), lower_bound=stride > 1)


@dataclass
class BoundReport:
    alpha: float
    integral_sup: float
    middle: float
    right: float
    norms: NormReport

    @property
    def first_holds(self) -> bool:
        return self.integral_sup <= self.middle

    @property
    def second_holds(self) -> bool:
        return self.middle <= self.right

    @property
    def slack(self) -> tuple[float, float]:
        return self.middle - self.integral_sup, self.right - self.middle

    def as_dict(self) -> dict:
        return {
            "integral_sup": self.integral_sup,
            "lambda_bound": self.middle,
            "weyl_bound": self.right,
            "first_holds": self.first_holds,
            "second_holds": self.second_holds,
            "slack": list(self.slack),
            "w_alpha1": self.norms.w_alpha1,
            "w_1ma_inf": self.norms.w_1ma_inf,
            "lambda_alpha": self.norms.lambda_alpha,
            "lower_bound": self.norms.lower_bound,
        }


def integral_bound_check(f, omega: SamplePath, alpha: float, stride: int = 1) -> BoundReport:
    """Evaluate both sides of the chain

    ``|int_0^t f dw| <= Lambda_alpha(w) |f|_{alpha,1} <= |w|_{1-alpha,inf,T} |f|_{alpha,1} / (Gamma(1-alpha) Gamma(alpha))``

    with the left side maximized over all grid times ``t``. Violations are
    reported, not raised.
    """
    alpha = check_order(alpha)
    f = as_grid_function(f)
    norms = weyl_norms(f, omega, alpha, stride)
    path = young_integral_path(f, omega, 0.0)
    lhs = float(np.linalg.norm(path.values, axis=1).max())
    middle = norms.lambda_alpha * norms.w_alpha1
    right = norms.w_1ma_inf * norms.w_alpha1 / (_gamma(1.0 - alpha) * _gamma(alpha))
    return BoundReport(alpha, lhs, middle, right, norms)


def shift_integral_identity_check(f, omega: SamplePath, a: float, b: float, c: float) -> float:
    """``|int_a^b f dw - int_{a-c}^{b-c} f(. + c) d(theta_c w)|`` with Young sums on both sides."""
    f = as_grid_function(f)
    omega.grid.steps(c, what="shift")
    for x in (a, b, a - c, b - c):
        if x < -1e-12 or x > omega.horizon + 1e-12:
            raise ValueError(f"integration limits {a}, {b} with shift {c} leave [0, {omega.horizon}]")
    lhs = young_integral(f, omega, a, b)
    shifted = wiener_shift(omega, c)
    rhs = young_integral(f.shifted(c), shifted, a - c, b - c)
    return float(np.linalg.norm(lhs - rhs))
