"""Benchmark protocols and bundled desk-scale data."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sampler
from .errors import MolError
from .genops import DEFAULT_CONFIG, OperatorConfig, add_carbon, mutate, reproduce
from .molgraph import MolGraph, canonical_form
from .smiles import parse


@dataclass
class Rejection:
    line_number: int
    text: str
    kind: str  # syntax | unsupported | valence | other
    message: str


@dataclass
class IngestResult:
    molecules: list[MolGraph] = field(default_factory=list)
    smiles: list[str] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)


def _rejection_kind(exc: Exception) -> str:
    from .errors import InvalidMolecule, SmilesSyntaxError, UnsupportedFeature

    if isinstance(exc, SmilesSyntaxError):
        return "syntax"
    if isinstance(exc, UnsupportedFeature):
        return "unsupported"
    if isinstance(exc, InvalidMolecule):
        return "valence"
    return "other"


def ingest_lines(lines) -> IngestResult:
    """Parse one SMILES per line; blank and ``#`` lines are skipped silently.

    Only the first whitespace-separated field of a line is read, so
    ``SMILES name`` files work too.
    """
    out = IngestResult()
    for n, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        smi = text.split()[0]
        try:
            out.molecules.append(parse(smi))
            out.smiles.append(smi)
        except MolError as exc:
            out.rejections.append(Rejection(n, smi, _rejection_kind(exc), str(exc)))
    return out


def ingest_reference(path) -> IngestResult:
    with open(path, encoding="utf-8") as fh:
        return ingest_lines(fh)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("molga") / "data" / name))


def bundled_reference() -> IngestResult:
    return ingest_reference(bundled_path("reference.smi"))


def bundled_targets() -> dict[str, str]:
    out = {}
    for line in bundled_path("targets.smi").read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            name, smi = line.split()
            out[name] = smi
    return out


def unscored_ranking(reference: Sequence[MolGraph]) -> list[MolGraph]:
    """Deduplicated reference ordered by canonical string; the rank order used
    when there is no objective to sort by."""
    uniq: dict[str, MolGraph] = {}
    for g in reference:
        uniq.setdefault(canonical_form(g).string, g)
    return [uniq[k] for k in sorted(uniq)]


def generate_from_population(
    ranked: Sequence[MolGraph],
    n: int,
    rng: np.random.Generator,
    config: OperatorConfig = DEFAULT_CONFIG,
    mode: str = "quasi_grid",
    min_exponent: float = sampler.DEFAULT_MIN_EXPONENT,
) -> list[MolGraph]:
    """One sampling pass and one breeding pass over ``ranked`` (best first)."""
    if n <= 0:
        return []
    parents = sampler.sample_batch(ranked, 2 * n, rng, mode, min_exponent)
    parents = [parents[i] for i in rng.permutation(len(parents))]
    return [reproduce(parents[2 * i], parents[2 * i + 1], rng, config)[0] for i in range(n)]


def addcarbon_baseline(reference: Sequence[MolGraph], n: int, rng: np.random.Generator) -> list[MolGraph]:
    """``n`` AddCarbon samples, each from a uniformly chosen reference molecule.

    Molecules without a free valence are skipped when drawn.
    """
    eligible = [g for g in reference if any(g.free_valence(i) >= 1 for i in range(len(g.atoms)))]
    if n > 0 and not eligible:
        raise MolError("no reference molecule can take an extra carbon")
    return [add_carbon(eligible[int(rng.integers(len(eligible)))], rng) for _ in range(n)]


def mutated_variants(
    target: MolGraph,
    count: int,
    n_edits: int,
    rng: np.random.Generator,
    config: OperatorConfig = DEFAULT_CONFIG,
    max_tries: int = 100_000,
) -> list[MolGraph]:
    """``count`` distinct molecules, each ``n_edits`` random mutations away from
    ``target`` and never equal to it."""
    target_form = canonical_form(target).string
    seen: set[str] = set()
    out = []
    for _ in range(max_tries):
        g = target
        for _ in range(n_edits):
            g = mutate(g, rng, config)
        c = canonical_form(g).string
        if c != target_form and c not in seen:
            seen.add(c)
            out.append(g)
            if len(out) == count:
                return out
    raise RuntimeError(f"only found {len(out)} distinct variants in {max_tries} tries")


def rediscovery_start(
    target: MolGraph,
    seed: int,
    count: int = 100,
    n_edits: int = 3,
    config: OperatorConfig = DEFAULT_CONFIG,
) -> list[MolGraph]:
    """Starting population for a rediscovery run: ``count`` variants of the
    target, ``n_edits`` mutations away, drawn from a stream keyed by ``seed``."""
    return mutated_variants(target, count, n_edits, np.random.default_rng([seed, 7]), config)
