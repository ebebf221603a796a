import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsdde.grid import GridFunction, PathGrid
from fsdde.holder import (
    ConcatenationError,
    PairBudgetError,
    ResolutionWarning,
    concatenate,
    holder_norm,
    holder_seminorm,
    lambda_norm,
    little_holder_diagnostic,
    sup_norm,
    windowed_seminorm,
)


def fn(t0, t1, n, f):
    return GridFunction.from_callable(PathGrid.over(t0, t1, n), f)


ETA = fn(-1, 0, 256, lambda s: np.abs(s) ** 0.75)


def brute_seminorm(f, beta, delta=np.inf):
    v, t = f.values[:, 0], f.times
    best = 0.0
    for i in range(len(t)):
        for j in range(i + 1, len(t)):
            if t[j] - t[i] < delta:
                best = max(best, abs(v[j] - v[i]) / (t[j] - t[i]) ** beta)
    return best


def random_fn(seed, t0=0.0, t1=1.0, n=40):
    rng = np.random.default_rng(seed)
    g = PathGrid.over(t0, t1, n)
    rough = np.cumsum(rng.standard_normal(n + 1)) * np.sqrt(g.h)
    return GridFunction(g, (np.sin(3 * g.times) + rough)[:, None])


def test_sup_norm_examples():
    assert sup_norm(fn(0, 1, 8, lambda t: np.full_like(t, -3.0))) == 3.0
    assert sup_norm(fn(0, 1, 8, lambda t: t)) == 1.0
    assert sup_norm(ETA) == pytest.approx(1.0, abs=1e-15)


def test_seminorm_examples():
    assert holder_seminorm(fn(0, 1, 8, lambda t: np.full_like(t, 2.0)), 0.5) == 0.0
    assert holder_seminorm(fn(0, 1, 64, lambda t: t), 0.5) == pytest.approx(1.0, abs=1e-15)
    assert holder_seminorm(ETA, 0.75) == pytest.approx(1.0, abs=1e-12)
    assert holder_norm(ETA, 0.75) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_seminorm_matches_brute_force(seed):
    f = random_fn(seed)
    assert holder_seminorm(f, 0.6) == pytest.approx(brute_seminorm(f, 0.6), rel=1e-13)


def test_single_node_seminorm_warns():
    with pytest.warns(RuntimeWarning):
        assert holder_seminorm(GridFunction(PathGrid(0.0, 1.0, 0), [[1.0]]), 0.5) == 0.0


def test_pair_budget_and_stride():
    f = fn(0, 1, 10000, np.sin)
    with pytest.raises(PairBudgetError):
        holder_seminorm(f, 0.5)
    assert 0 < holder_seminorm(f, 0.5, stride=10) <= holder_seminorm(fn(0, 1, 8000, np.sin), 0.5) * (1 + 1e-9)


def test_bad_exponent():
    with pytest.raises(ValueError):
        holder_seminorm(ETA, 0.0)
    with pytest.raises(ValueError):
        holder_seminorm(ETA, 1.5)


def test_windowed_examples():
    c = fn(0, 1, 16, lambda t: np.ones_like(t))
    assert windowed_seminorm(c, 0.5, 0.3) == 0.0
    f = random_fn(3)
    assert windowed_seminorm(f, 0.5, 2.0) == holder_seminorm(f, 0.5)
    for d in (0.5, 0.1, 0.02):
        assert windowed_seminorm(ETA, 0.75, d) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("delta", [0.05, 0.1, 0.25, 0.6])
def test_windowed_matches_brute_force(delta):
    f = random_fn(7)
    assert windowed_seminorm(f, 0.7, delta) == pytest.approx(brute_seminorm(f, 0.7, delta), rel=1e-13)


def test_window_below_resolution():
    with pytest.warns(ResolutionWarning):
        assert windowed_seminorm(ETA, 0.75, ETA.grid.h) == 0.0
    with pytest.raises(ValueError):
        windowed_seminorm(ETA, 0.75, 0.0)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_windowed_monotone_in_delta(seed, d1, d2):
    f = random_fn(seed)
    lo, hi = sorted((d1, d2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        assert windowed_seminorm(f, 0.5, lo) <= windowed_seminorm(f, 0.5, hi)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_seminorm_ordering_in_beta(seed, b1, b2):
    f = random_fn(seed)
    lo, hi = sorted((b1, b2))
    assert holder_seminorm(f, lo) <= holder_seminorm(f, hi) * (1 + 1e-12)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_seminorm_triangle(s1, s2):
    f, g = random_fn(s1), random_fn(s2)
    assert holder_seminorm(f + g, 0.6) <= (holder_seminorm(f, 0.6) + holder_seminorm(g, 0.6)) * (1 + 1e-12)


def test_little_holder_lipschitz():
    rep = little_holder_diagnostic(fn(0, 1, 1024, lambda t: t), 0.75, [2.0**-k for k in range(1, 7)])
    assert rep.status == "consistent"
    assert rep.slope == pytest.approx(0.25, abs=0.02)


def test_little_holder_rough_segment():
    rep = little_holder_diagnostic(ETA, 0.75, [2.0**-k for k in range(1, 6)])
    assert rep.status == "not_consistent"
    assert abs(rep.slope) < 0.01


def test_little_holder_constant_and_inconclusive():
    c = fn(0, 1, 64, lambda t: np.ones_like(t))
    assert little_holder_diagnostic(c, 0.5, [0.5, 0.25, 0.125]).status == "consistent"
    rep = little_holder_diagnostic(c, 0.5, [0.5, 0.25, 1e-4])
    assert rep.status == "inconclusive" and rep.notes


def test_lambda_norm_examples():
    f = random_fn(2, -0.5, 1.0)
    assert lambda_norm(f, 0.6, 0.0) == sup_norm(f) + holder_seminorm(f, 0.6)
    c = fn(0, 2, 32, lambda t: np.full_like(t, -2.5))
    assert lambda_norm(c, 0.6, 3.0) == pytest.approx(2.5, abs=1e-15)
    with pytest.raises(ValueError):
        lambda_norm(c, 0.6, -1.0)


@pytest.mark.parametrize("seed", range(10))
def test_lambda_norm_sandwich(seed):
    r, T, lam = 0.5, 1.0, 1.7
    f = random_fn(seed, -r, T)
    full = holder_norm(f, 0.6)
    val = lambda_norm(f, 0.6, lam)
    assert np.exp(-lam * T) * full <= val * (1 + 1e-12)
    assert val <= np.exp(lam * r) * full * (1 + 1e-12)


def test_concatenate_constants():
    eta = fn(-1, 0, 8, lambda s: np.full_like(s, 2.0))
    mu = fn(0, 2, 16, lambda t: np.full_like(t, 2.0))
    xi = concatenate(eta, mu)
    assert xi.grid.t0 == -1 and xi.grid.n == 24
    assert holder_seminorm(xi, 0.5) == 0.0


def test_concatenate_errors():
    eta = fn(-1, 0, 8, lambda s: s)
    with pytest.raises(ConcatenationError, match="eta\\(0\\)=\\[0.0\\] mu\\(0\\)=\\[1.0\\]"):
        concatenate(eta, fn(0, 1, 8, lambda t: t + 1))
    with pytest.raises(ConcatenationError):
        concatenate(eta, fn(0, 1, 4, lambda t: t))


@pytest.mark.parametrize("delta", [0.01, 0.05, 0.2, 0.5, 1.5])
def test_concatenation_estimate_rough_pair(delta):
    eta = fn(-1, 0, 128, lambda s: np.abs(s) ** 0.75)
    mu = fn(0, 1, 128, lambda t: t**0.75)
    xi = concatenate(eta, mu)
    assert windowed_seminorm(xi, 0.75, delta) <= windowed_seminorm(eta, 0.75, delta) + windowed_seminorm(mu, 0.75, delta)
