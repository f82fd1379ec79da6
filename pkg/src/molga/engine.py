"""The genetic-algorithm loop: initialize, sample, breed, score under a budget, select."""

from __future__ import annotations

import json
import logging
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import sampler
from .errors import BudgetExhausted, EmptyReference, MolError, OracleError
from .genops import OperatorConfig, generate_offspring
from .metrics import auc_top10
from .molgraph import MolGraph, canonical_form

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoredMol:
    canonical: str
    graph: MolGraph = field(compare=False, repr=False)
    score: float
    eval_index: int | None = None  # None: score came from the cache or was not charged
    operator: str = "reference"
    parents: tuple[str, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score {self.score} for {self.canonical}")


def selection_key(m: ScoredMol):
    return (-m.score, m.canonical)


def select_population(current: Iterable[ScoredMol], offspring: Iterable[ScoredMol], capacity: int) -> "Population":
    """Greedy survivor selection: the ``capacity`` best of the deduplicated union.

    Ties are broken by canonical string, ascending. On duplicate canonical
    forms the copy already in ``current`` is kept.
    """
    merged: dict[str, ScoredMol] = {}
    for m in list(current) + list(offspring):
        merged.setdefault(m.canonical, m)
    ranked = sorted(merged.values(), key=selection_key)[:capacity]
    return Population(capacity, ranked)


class Population:
    """Members unique by canonical form, kept sorted best-first."""

    def __init__(self, capacity: int, members: Iterable[ScoredMol] = ()):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        uniq: dict[str, ScoredMol] = {}
        for m in members:
            uniq.setdefault(m.canonical, m)
        if len(uniq) > capacity:
            raise ValueError(f"{len(uniq)} members exceed capacity {capacity}")
        self._ranked = sorted(uniq.values(), key=selection_key)
        self._index = set(uniq)

    @property
    def ranked(self) -> list[ScoredMol]:
        return list(self._ranked)

    def __len__(self):
        return len(self._ranked)

    def __iter__(self):
        return iter(self._ranked)

    def __contains__(self, canonical: str) -> bool:
        return canonical in self._index

    def top(self, k: int) -> list[ScoredMol]:
        return self._ranked[:k]

    def scores(self) -> list[float]:
        return [m.score for m in self._ranked]

    @property
    def best(self) -> ScoredMol:
        return self._ranked[0]


@dataclass
class EvalRecord:
    eval_index: int
    canonical: str
    score: float
    operator: str
    parents: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps(
            {"eval_index": self.eval_index, "canonical": self.canonical, "score": self.score, "operator": self.operator, "parents": list(self.parents)}
        )


class BudgetLedger:
    """Counts distinct oracle evaluations and caches their scores.

    Cache hits are free. ``history`` holds one record per charged evaluation,
    in commit order; ``eval_index`` is 1-based.
    """

    def __init__(self, limit: int = 10_000):
        if limit < 1:
            raise ValueError("budget must be positive")
        self.limit = limit
        self.history: list[EvalRecord] = []
        self.cache: dict[str, float] = {}

    @property
    def used(self) -> int:
        return len(self.history)

    @property
    def remaining(self) -> int:
        return self.limit - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.limit

    def commit(self, canonical: str, score: float, operator: str = "", parents: tuple[str, ...] = (), charge: bool = True) -> int | None:
        if canonical in self.cache:
            raise ValueError(f"{canonical} already scored")
        if not math.isfinite(score):
            raise OracleError(f"oracle returned non-finite score {score} for {canonical}")
        self.cache[canonical] = score
        if not charge:
            return None
        if self.exhausted:
            raise BudgetExhausted(f"budget of {self.limit} evaluations exhausted")
        self.history.append(EvalRecord(self.used + 1, canonical, score, operator, tuple(parents)))
        return self.used

    def scores(self) -> list[float]:
        return [r.score for r in self.history]


@dataclass
class GAConfig:
    population_size: int = 100
    offspring_size: int = 5
    budget: int = 10_000
    rng_seed: int = 0
    operators: OperatorConfig = field(default_factory=OperatorConfig)
    sampler_mode: str = "quasi_grid"
    min_exponent: float = sampler.DEFAULT_MIN_EXPONENT
    count_initial: bool = True
    # Consecutive steps with no new evaluation before the run gives up.
    max_stall_steps: int = 1000
    threads: int = 1

    def __post_init__(self):
        if self.offspring_size < 1:
            raise ValueError("offspring_size must be >= 1")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.count_initial and self.population_size > self.budget:
            raise ValueError("population_size must not exceed the budget")
        if self.sampler_mode not in sampler.MODES:
            raise ValueError(f"sampler mode must be one of {sampler.MODES}")
        if not self.min_exponent < 0:
            raise ValueError("min_exponent must be negative")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["operators"]["insert_elements"] = list(self.operators.insert_elements)
        d["operators"]["substitution_elements"] = list(self.operators.substitution_elements)
        return d


def _score(oracle: Callable, graph: MolGraph, canonical: str) -> float:
    try:
        if hasattr(oracle, "score_smiles"):
            return float(oracle.score_smiles(canonical))
        return float(oracle(graph))
    except (OracleError, BudgetExhausted):
        raise
    except Exception as exc:  # oracle code is user-supplied
        raise OracleError(f"oracle failed on {canonical}: {exc}") from exc


def score_candidates(
    candidates: Sequence[tuple[str, MolGraph, str, tuple[str, ...]]],
    oracle: Callable,
    ledger: BudgetLedger,
    charge: bool = True,
    threads: int = 1,
) -> dict[str, ScoredMol]:
    """Score (canonical, graph, operator, parents) tuples through the ledger.

    Cached forms are free. New forms are scored until the budget runs out and
    committed in input order even when scored concurrently, so eval indices
    do not depend on thread timing.
    """
    out: dict[str, ScoredMol] = {}
    fresh = []
    for canon, graph, op, parents in candidates:
        if canon in out:
            continue
        if canon in ledger.cache:
            out[canon] = ScoredMol(canon, graph, ledger.cache[canon], None, op, parents)
        elif not any(c == canon for c, *_ in fresh):
            fresh.append((canon, graph, op, parents))
    if charge:
        fresh = fresh[: max(0, ledger.remaining)]
    if threads > 1 and len(fresh) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = list(pool.map(lambda c: _score(oracle, c[1], c[0]), fresh))
    else:
        scores = [_score(oracle, g, c) for c, g, *_ in fresh]
    for (canon, graph, op, parents), s in zip(fresh, scores):
        idx = ledger.commit(canon, s, op, parents, charge=charge)
        out[canon] = ScoredMol(canon, graph, s, idx, op, parents)
    return out


def _canonicalize(graphs: Iterable[MolGraph]) -> list[tuple[str, MolGraph]]:
    out = []
    for g in graphs:
        try:
            out.append((canonical_form(g).string, g))
        except MolError:
            log.warning("dropping molecule that failed canonicalization")
    return out


def init_population(reference: Sequence[MolGraph], oracle: Callable, config: GAConfig, ledger: BudgetLedger, rng: np.random.Generator) -> Population:
    """Score a random, deduplicated subset of ``reference`` as the starting population."""
    if not reference:
        raise EmptyReference("the reference set is empty")
    unique: dict[str, MolGraph] = {}
    for canon, g in _canonicalize(reference):
        unique.setdefault(canon, g)
    if not unique:
        raise EmptyReference("no usable molecule in the reference set")
    keys = sorted(unique)
    take = min(config.population_size, len(keys))
    chosen = [keys[i] for i in rng.permutation(len(keys))[:take]]
    if config.count_initial and ledger.remaining < len([c for c in chosen if c not in ledger.cache]):
        raise BudgetExhausted("budget too small to score the initial population")
    scored = score_candidates([(c, unique[c], "reference", ()) for c in chosen], oracle, ledger, config.count_initial, config.threads)
    return Population(config.population_size, scored.values())


def lane_rngs(seed: int, generation: int, k: int) -> list[np.random.Generator]:
    return [np.random.default_rng([seed, generation, lane]) for lane in range(k)]


def step(
    population: Population,
    oracle: Callable,
    config: GAConfig,
    ledger: BudgetLedger,
    rng: np.random.Generator,
    generation: int = 0,
    stats: Counter | None = None,
) -> Population:
    """One generation: sample parents, breed ``offspring_size`` children, score, select."""
    if ledger.exhausted:
        raise BudgetExhausted("no budget left for another step")
    ranked = population.ranked
    k = config.offspring_size
    parents = sampler.sample_batch(ranked, 2 * k, rng, config.sampler_mode, config.min_exponent)
    parents = [parents[i] for i in rng.permutation(len(parents))]
    batch = generate_offspring(
        [p.graph for p in parents],
        lane_rngs(config.rng_seed, generation, k),
        config.operators,
        [p.canonical for p in parents],
        stats,
    )
    candidates = []
    for g, (op, par) in zip(batch.molecules, batch.provenance):
        try:
            candidates.append((canonical_form(g).string, g, op, par))
        except MolError:
            log.warning("operator produced an invalid molecule; skipped")
    scored = score_candidates(candidates, oracle, ledger, True, config.threads)
    return select_population(population, scored.values(), config.population_size)


@dataclass
class RunResult:
    population: list[ScoredMol]
    history: list[EvalRecord]
    config: dict
    oracle_name: str
    steps: int
    operator_stats: dict
    stop_reason: str

    @property
    def scores(self) -> list[float]:
        return [r.score for r in self.history]

    def auc(self):
        return auc_top10(self.scores, self.config["budget"])

    def summary(self) -> dict:
        rep = self.auc() if self.history else None
        best = self.population[0] if self.population else None
        return {
            "summary": True,
            "oracle": self.oracle_name,
            "n_evals": len(self.history),
            "budget": self.config["budget"],
            "steps": self.steps,
            "stop_reason": self.stop_reason,
            "auc_top10": rep.auc_top10 if rep else None,
            "final_top10_mean": rep.final_top10_mean if rep else None,
            "best_score": best.score if best else None,
            "best_canonical": best.canonical if best else None,
            "operator_stats": dict(sorted(self.operator_stats.items())),
        }

    def to_jsonl(self) -> str:
        lines = [r.to_json() for r in self.history]
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return "\n".join(lines) + "\n"


def run(config: GAConfig, oracle: Callable, reference: Sequence[MolGraph]) -> RunResult:
    """Run the GA until the budget is spent (or the search stalls)."""
    rng = np.random.default_rng(config.rng_seed)
    ledger = BudgetLedger(config.budget)
    stats: Counter = Counter()
    population = init_population(reference, oracle, config, ledger, rng)
    steps, stall = 0, 0
    reason = "budget_exhausted"
    while not ledger.exhausted:
        before = ledger.used
        population = step(population, oracle, config, ledger, rng, steps + 1, stats)
        steps += 1
        stall = stall + 1 if ledger.used == before else 0
        if stall >= config.max_stall_steps:
            reason = "stalled"
            log.info("no new molecule in %d steps; stopping at %d evaluations", stall, ledger.used)
            break
    return RunResult(
        population.ranked,
        list(ledger.history),
        config.to_dict(),
        getattr(oracle, "name", type(oracle).__name__),
        steps,
        dict(stats),
        reason,
    )


def threads_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("MOLGA_THREADS", default)))
    except ValueError:
        return default
