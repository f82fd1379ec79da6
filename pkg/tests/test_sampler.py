import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from molga.engine import Population, ScoredMol
from molga.errors import EmptyPopulation
from molga.sampler import (
    QuantileDraw,
    grid_exponents,
    pool_size,
    rank_probabilities,
    sample_batch,
    sample_indices,
    sample_one,
)


def numeric_mixture(n: int, min_exponent: float = -3.0, points: int = 400_000) -> np.ndarray:
    """P(rank r) = E_u[1{r <= pool(u)} / pool(u)] by midpoint integration over u."""
    us = min_exponent + (-min_exponent) * (np.arange(points) + 0.5) / points
    pools = np.minimum(n, np.maximum(1, np.ceil(10.0**us * n - 1e-9))).astype(np.int64)
    counts = np.bincount(pools, minlength=n + 1)[1:]  # how many grid points give each pool size
    # Each pool size p spreads its mass evenly over ranks 1..p.
    per_rank = counts / np.arange(1, n + 1) / points
    return np.cumsum(per_rank[::-1])[::-1]


# --- draws and pools ---------------------------------------------------------


def test_draw_fields():
    d = QuantileDraw(-3.0, 1000)
    assert d.epsilon == pytest.approx(1e-3) and d.pool_size == 1
    d = QuantileDraw(0.0, 1000)
    assert d.epsilon == 1.0 and d.pool_size == 1000


def test_pool_size_rounding():
    assert pool_size(0.01, 100) == 1  # float noise must not round up to 2
    assert pool_size(0.011, 100) == 2
    assert pool_size(1e-6, 5) == 1
    assert pool_size(1.0, 7) == 7


def test_top_member_at_minimum_exponent():
    ranked = list(range(1000))
    rng = np.random.default_rng(0)
    assert {sample_one(ranked, QuantileDraw(-3.0, 1000), rng) for _ in range(200)} == {0}


def test_full_pool_at_zero_is_uniform():
    ranked = list(range(10))
    rng = np.random.default_rng(0)
    draws = [sample_one(ranked, QuantileDraw(0.0, 10), rng) for _ in range(20_000)]
    counts = np.bincount(draws, minlength=10)
    assert stats.chisquare(counts).pvalue > 0.001


def test_empty_population():
    rng = np.random.default_rng(0)
    with pytest.raises(EmptyPopulation):
        sample_one([], QuantileDraw(-1.0, 1), rng)
    with pytest.raises(EmptyPopulation):
        sample_batch([], 3, rng)


def test_quasi_grid_k4():
    us = grid_exponents(4)
    assert us.tolist() == [-2.625, -1.875, -1.125, -0.375]
    eps = 10.0**us
    assert eps == pytest.approx([0.002371, 0.013335, 0.074989, 0.421697], abs=1e-6)


def test_quasi_grid_k1():
    us = grid_exponents(1)
    assert us.tolist() == [-1.5]
    assert 10.0 ** us[0] == pytest.approx(0.03162, abs=1e-5)


def test_every_member_within_its_pool():
    rng = np.random.default_rng(1)
    for mode in ("quasi_grid", "random"):
        for n in (1, 2, 7, 100, 1000):
            idx, pools = sample_indices(n, 257, rng, mode)
            assert np.all(idx < pools) and np.all(pools >= 1) and np.all(pools <= n)


def test_unknown_mode():
    with pytest.raises(ValueError):
        sample_batch([1, 2], 2, np.random.default_rng(0), mode="sobol")


# --- the mixture -------------------------------------------------------------


def test_analytic_mixture_matches_numeric_integration():
    for n in (1, 10, 100, 1000):
        exact = rank_probabilities(n)
        assert exact.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(exact - numeric_mixture(n))) < 2e-5


def _chi2_binned(counts, expected, min_expected=5.0):
    # Merge neighbouring ranks until every bin expects at least min_expected draws.
    obs, exp = [], []
    o = e = 0.0
    for c, x in zip(counts, expected):
        o += c
        e += x
        if e >= min_expected:
            obs.append(o)
            exp.append(e)
            o = e = 0.0
    if e > 0:
        obs[-1] += o
        exp[-1] += e
    return stats.chisquare(obs, exp)


def test_one_million_random_draws_match_mixture():
    n, draws = 1000, 1_000_000
    idx, _ = sample_indices(n, draws, np.random.default_rng(2024), "random")
    counts = np.bincount(idx, minlength=n)
    res = _chi2_binned(counts, numeric_mixture(n) * draws)
    assert res.pvalue > 0.001


def test_one_million_grid_draws_match_mixture():
    n, draws = 1000, 1_000_000
    idx, _ = sample_indices(n, draws, np.random.default_rng(7), "quasi_grid")
    counts = np.bincount(idx, minlength=n)
    assert _chi2_binned(counts, numeric_mixture(n) * draws).pvalue > 0.001


def test_rank_monotonicity_binned():
    n = 1000
    for mode, seed in (("random", 3), ("quasi_grid", 4)):
        idx, _ = sample_indices(n, 1_000_000, np.random.default_rng(seed), mode)
        binned = np.bincount(idx, minlength=n).reshape(-1, 50).sum(axis=1)
        assert int(np.sum(np.diff(binned) > 0)) == 0


def test_mixture_monotone_and_full_support():
    for n in (2, 50, 1000):
        p = rank_probabilities(n)
        assert np.all(np.diff(p) <= 1e-15)
        assert np.all(p > 0)


# --- rank-only dependence ----------------------------------------------------


def _population(scores):
    members = [ScoredMol(f"m{i:04d}", None, float(s)) for i, s in enumerate(scores)]
    return Population(len(members), members)


def test_rank_only_dependence_exact():
    rng = np.random.default_rng(5)
    raw = rng.normal(size=1000) * 7.0 + 3.0
    ranks = np.argsort(np.argsort(raw)).astype(float)  # strictly monotone transform
    for mode in ("quasi_grid", "random"):
        hist = []
        for scores in (raw, ranks, np.exp(raw / 10.0)):
            pop = _population(scores)
            picks = sample_batch(pop.ranked, 100_000, np.random.default_rng(99), mode)
            hist.append(np.bincount([int(m.canonical[1:]) for m in picks], minlength=1000))
        assert np.array_equal(hist[0], hist[1]) and np.array_equal(hist[0], hist[2])


@settings(max_examples=100, deadline=None)
@given(
    st.integers(min_value=1, max_value=2000),
    st.floats(min_value=-6.0, max_value=-0.01),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_property_pool_bounds(n, min_exp, t):
    u = min_exp * (1 - t)
    d = QuantileDraw(u, n)
    assert 10.0**min_exp <= d.epsilon <= 1.0
    assert 1 <= d.pool_size <= n
    assert d.pool_size >= math.ceil(d.epsilon * n - 1e-9)
