"""Quantile-based parent sampling.

Each draw picks an exponent ``u`` in ``[min_exponent, 0]``, sets
``epsilon = 10**u`` and returns a member chosen uniformly from the top
``epsilon`` fraction of a ranked population. The sampler only ever sees ranks,
never scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TypeVar

import numpy as np

from .errors import EmptyPopulation

T = TypeVar("T")

DEFAULT_MIN_EXPONENT = -3.0
MODES = ("quasi_grid", "random")


def pool_size(epsilon: float, population_size: int) -> int:
    # The 1e-9 slack absorbs float noise such as 10**-2 * 100 == 1.0000000000000002.
    return min(population_size, max(1, math.ceil(epsilon * population_size - 1e-9)))


@dataclass(frozen=True)
class QuantileDraw:
    u: float
    population_size: int

    @property
    def epsilon(self) -> float:
        return 10.0**self.u

    @property
    def pool_size(self) -> int:
        return pool_size(self.epsilon, self.population_size)


def grid_exponents(k: int, min_exponent: float = DEFAULT_MIN_EXPONENT) -> np.ndarray:
    """Midpoints of ``k`` equal subintervals of ``[min_exponent, 0]``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return min_exponent + (-min_exponent) * (np.arange(k) + 0.5) / k


def _pool_sizes(us: np.ndarray, n: int) -> np.ndarray:
    return np.array([pool_size(10.0**u, n) for u in us], dtype=np.int64)


def sample_one(ranked: Sequence[T], draw: QuantileDraw, rng: np.random.Generator) -> T:
    if len(ranked) == 0:
        raise EmptyPopulation("cannot sample from an empty population")
    p = pool_size(draw.epsilon, len(ranked))
    return ranked[int(rng.integers(p))]


def sample_indices(
    n: int,
    k: int,
    rng: np.random.Generator,
    mode: str = "quasi_grid",
    min_exponent: float = DEFAULT_MIN_EXPONENT,
) -> tuple[np.ndarray, np.ndarray]:
    """Rank indices (0 = best) for ``k`` draws, plus each draw's pool size."""
    if n <= 0:
        raise EmptyPopulation("cannot sample from an empty population")
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode == "quasi_grid":
        us = grid_exponents(k, min_exponent)
    elif mode == "random":
        us = rng.uniform(min_exponent, 0.0, size=k)
    else:
        raise ValueError(f"unknown sampler mode {mode!r}; expected one of {MODES}")
    pools = _pool_sizes(us, n)
    return rng.integers(0, pools), pools


def sample_batch(
    ranked: Sequence[T],
    k: int,
    rng: np.random.Generator,
    mode: str = "quasi_grid",
    min_exponent: float = DEFAULT_MIN_EXPONENT,
) -> list[T]:
    """Draw ``k`` members (with repetition) from a population sorted best-first."""
    idx, _ = sample_indices(len(ranked), k, rng, mode, min_exponent)
    return [ranked[i] for i in idx]


def rank_probabilities(n: int, min_exponent: float = DEFAULT_MIN_EXPONENT) -> np.ndarray:
    """Exact selection probability of each rank under mode='random'.

    P(rank r) = E_u[1{r <= pool(u)} / pool(u)]. ``pool(u)`` is piecewise
    constant in ``u``, so the expectation is a finite sum over the u-intervals
    on which each pool size holds.
    """
    span = -min_exponent
    probs = np.zeros(n)
    lo_u = min_exponent
    for p in range(1, n + 1):
        hi_u = min(0.0, math.log10(p / n))
        if hi_u > lo_u:
            probs[:p] += (hi_u - lo_u) / span / p
            lo_u = hi_u
    return probs
