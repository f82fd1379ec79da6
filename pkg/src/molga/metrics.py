"""Evaluation: unconditional-generation metrics and AUC top-10 under a budget."""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyHistory, MolError
from .molgraph import MolGraph, canonical_form, check_valence

TOP_K = 10


@dataclass
class GenerationReport:
    n_generated: int
    n_valid: int
    n_unique: int
    n_novel: int

    @property
    def validity(self) -> float:
        return self.n_valid / self.n_generated if self.n_generated else 0.0

    @property
    def uniqueness(self) -> float:
        return self.n_unique / self.n_valid if self.n_valid else 0.0

    @property
    def novelty(self) -> float:
        return self.n_novel / self.n_unique if self.n_unique else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(validity=self.validity, uniqueness=self.uniqueness, novelty=self.novelty)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _canonical_or_none(item) -> str | None:
    if item is None or isinstance(item, BaseException):
        return None
    if isinstance(item, str):
        from .smiles import parse

        try:
            item = parse(item)
        except MolError:
            return None
    if isinstance(item, MolGraph):
        if not check_valence(item):
            return None
        try:
            return canonical_form(item).string
        except MolError:
            return None
    raise TypeError(f"cannot interpret generated item of type {type(item).__name__}")


def generation_metrics(generated: Sequence, reference: Iterable[str]) -> GenerationReport:
    """Validity, uniqueness and novelty of ``generated``.

    ``generated`` items may be MolGraphs, SMILES strings (parsed here) or
    None / exceptions (failed generations). ``reference`` holds canonical
    strings. Uniqueness is over valid molecules; novelty is over unique ones.
    """
    reference = set(reference)
    canon = [_canonical_or_none(x) for x in generated]
    valid = [c for c in canon if c is not None]
    unique = set(valid)
    return GenerationReport(len(canon), len(valid), len(unique), len(unique - reference))


@dataclass
class AucReport:
    auc_top10: float
    final_top10_mean: float
    curve: list[float] = field(repr=False)
    budget: int = 0

    def to_dict(self) -> dict:
        return {"auc_top10": self.auc_top10, "final_top10_mean": self.final_top10_mean, "budget": self.budget, "n_evals": len(self.curve)}


def running_topk_mean(scores: Sequence[float], k: int = TOP_K) -> list[float]:
    """t_i = mean of the k largest among the first i scores (all of them while i < k).

    Sums use math.fsum, so each value is correctly rounded and independent of
    summation order.
    """
    heap: list[float] = []
    curve = []
    for s in scores:
        if len(heap) < k:
            heapq.heappush(heap, s)
        elif s > heap[0]:
            heapq.heapreplace(heap, s)
        curve.append(math.fsum(heap) / len(heap))
    return curve


def auc_top10(history: Sequence[float], budget: int) -> AucReport:
    """Area under the running top-10 mean curve, normalized by the budget.

    Runs that stop early are extended flat from their last value.
    """
    history = [float(x) for x in history]
    if not history:
        raise EmptyHistory("auc_top10 needs at least one evaluation")
    if len(history) > budget:
        raise ValueError(f"history of {len(history)} exceeds the budget {budget}")
    curve = running_topk_mean(history)
    final = curve[-1]
    area = math.fsum(itertools.chain(curve, itertools.repeat(final, budget - len(curve))))
    return AucReport(area / budget, final, curve, budget)


def format_generation_row(method: str, report: GenerationReport) -> str:
    return f"{method:<16} validity {100 * report.validity:6.2f}%  novelty {100 * report.novelty:6.2f}%  uniqueness {100 * report.uniqueness:6.2f}%"


def format_auc_row(task: str, aucs: Sequence[float]) -> str:
    n = len(aucs)
    mean = sum(aucs) / n
    std = math.sqrt(sum((a - mean) ** 2 for a in aucs) / n) if n > 1 else 0.0
    return f"{task:<28} {mean:.3f}±{std:.3f}"
