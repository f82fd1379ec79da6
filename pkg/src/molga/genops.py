"""Graph mutation and crossover operators, plus the AddCarbon baseline.

Every operator returns a valence-valid, connected graph of at most
``size_cap`` heavy atoms. Infeasible attempts are retried a bounded number of
times and then degrade to a declared fallback instead of raising.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NoFreeValence, SizeLimitExceeded
from .molgraph import (
    MAX_HEAVY_ATOMS,
    Atom,
    Bond,
    MolGraph,
    bridges,
    check_valence,
    default_hydrogens,
    is_connected,
    shortest_path_lengths,
)

DEFAULT_MUTATION_WEIGHTS = {
    "insert_atom": 0.25,
    "delete_atom": 0.15,
    "substitute_element": 0.25,
    "change_bond_order": 0.20,
    "add_ring_bond": 0.075,
    "delete_ring_bond": 0.075,
}
DEFAULT_INSERT_ELEMENTS = ("C",)
DEFAULT_SUBSTITUTION_ELEMENTS = ("C", "N", "O", "S", "F", "Cl", "Br")
MAX_RETRIES = 20
MIN_RING, MAX_RING = 3, 7


@dataclass(frozen=True)
class OperatorConfig:
    mutation_weights: dict = field(default_factory=lambda: dict(DEFAULT_MUTATION_WEIGHTS))
    crossover_prob: float = 0.5
    mutate_after_crossover: float = 0.5
    insert_elements: tuple = DEFAULT_INSERT_ELEMENTS
    substitution_elements: tuple = DEFAULT_SUBSTITUTION_ELEMENTS
    max_retries: int = MAX_RETRIES
    size_cap: int = MAX_HEAVY_ATOMS

    def __post_init__(self):
        unknown = set(self.mutation_weights) - set(DEFAULT_MUTATION_WEIGHTS)
        if unknown:
            raise ValueError(f"unknown mutation kinds: {sorted(unknown)}")
        if any(w < 0 for w in self.mutation_weights.values()) or sum(self.mutation_weights.values()) <= 0:
            raise ValueError("mutation weights must be nonnegative with a positive sum")
        for p in (self.crossover_prob, self.mutate_after_crossover):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")

    def kinds_and_probs(self) -> tuple[list[str], np.ndarray]:
        kinds = [k for k in DEFAULT_MUTATION_WEIGHTS if self.mutation_weights.get(k, 0) > 0]
        w = np.array([self.mutation_weights[k] for k in kinds], dtype=float)
        return kinds, w / w.sum()


DEFAULT_CONFIG = OperatorConfig()


# --- single edits ------------------------------------------------------------
# Each enumerator lists every concrete edit of its kind; an edit is a
# zero-argument callable returning the edited graph.


def _insert_atom_edits(g: MolGraph, cfg: OperatorConfig) -> list[Callable[[], MolGraph]]:
    if len(g.atoms) >= cfg.size_cap:
        return []
    n = len(g.atoms)
    edits = []
    for i in range(n):
        if g.free_valence(i) >= 1:
            for el in cfg.insert_elements:
                edits.append(lambda i=i, el=el: g.with_changes(atoms=g.atoms + (Atom(el),), bonds=g.bonds + (Bond(i, n, 1),)))
    return edits


def _remove_atom(g: MolGraph, idx: int) -> MolGraph:
    remap = {old: (old if old < idx else old - 1) for old in range(len(g.atoms)) if old != idx}
    atoms = tuple(a for k, a in enumerate(g.atoms) if k != idx)
    bonds = tuple(Bond(remap[b.i], remap[b.j], b.order) for b in g.bonds if idx not in b.pair)
    return MolGraph(atoms, bonds)


def _delete_atom_edits(g: MolGraph, cfg: OperatorConfig):
    if len(g.atoms) < 2:
        return []
    edits = []
    for i in range(len(g.atoms)):
        if g.degree(i) == 1:
            nbr = g.adjacency[i][0][0]
            if g.atoms[nbr].explicit_h is None:
                edits.append(lambda i=i: _remove_atom(g, i))
    return edits


def _substitute_edits(g: MolGraph, cfg: OperatorConfig):
    edits = []
    for i, a in enumerate(g.atoms):
        if a.explicit_h is not None or a.formal_charge != 0:
            continue
        bsum = g.bond_sum(i)
        for el in cfg.substitution_elements:
            if el != a.element and default_hydrogens(el, 0, bsum) is not None:
                edits.append(lambda i=i, el=el: g.with_changes(atoms=g.atoms[:i] + (Atom(el),) + g.atoms[i + 1 :]))
    return edits


def _replace_bond(g: MolGraph, pair, order: int | None) -> MolGraph:
    bonds = tuple(b for b in g.bonds if b.pair != pair)
    if order:
        bonds = bonds + (Bond(pair[0], pair[1], order),)
    return g.with_changes(bonds=bonds)


def _bond_order_edits(g: MolGraph, cfg: OperatorConfig):
    edits = []
    for b in g.bonds:
        if b.order < 3 and g.free_valence(b.i) >= 1 and g.free_valence(b.j) >= 1:
            edits.append(lambda b=b: _replace_bond(g, b.pair, b.order + 1))
        if b.order > 1 and g.atoms[b.i].explicit_h is None and g.atoms[b.j].explicit_h is None:
            edits.append(lambda b=b: _replace_bond(g, b.pair, b.order - 1))
    return edits


def _add_ring_bond_edits(g: MolGraph, cfg: OperatorConfig):
    free = [i for i in range(len(g.atoms)) if g.free_valence(i) >= 1]
    free_set = set(free)
    edits = []
    for i in free:
        dist = shortest_path_lengths(g, i)
        for j in free:
            if j > i and j in free_set and MIN_RING - 1 <= dist[j] <= MAX_RING - 1:
                edits.append(lambda i=i, j=j: g.with_changes(bonds=g.bonds + (Bond(i, j, 1),)))
    return edits


def _delete_ring_bond_edits(g: MolGraph, cfg: OperatorConfig):
    br = bridges(g)
    return [
        (lambda b=b: _replace_bond(g, b.pair, None))
        for b in g.bonds
        if b.pair not in br and g.atoms[b.i].explicit_h is None and g.atoms[b.j].explicit_h is None
    ]


EDIT_ENUMERATORS = {
    "insert_atom": _insert_atom_edits,
    "delete_atom": _delete_atom_edits,
    "substitute_element": _substitute_edits,
    "change_bond_order": _bond_order_edits,
    "add_ring_bond": _add_ring_bond_edits,
    "delete_ring_bond": _delete_ring_bond_edits,
}


def is_acceptable(g: MolGraph, size_cap: int = MAX_HEAVY_ATOMS) -> bool:
    return len(g.atoms) <= size_cap and check_valence(g) and is_connected(g)


def mutate_detailed(
    parent: MolGraph,
    rng: np.random.Generator,
    config: OperatorConfig = DEFAULT_CONFIG,
    stats: Counter | None = None,
) -> tuple[MolGraph, str | None]:
    """Apply one random edit. Returns (child, edit kind), or (parent, None)
    once ``config.max_retries`` attempts have all been infeasible."""
    kinds, probs = config.kinds_and_probs()
    for _ in range(config.max_retries):
        kind = kinds[rng.choice(len(kinds), p=probs)]
        edits = EDIT_ENUMERATORS[kind](parent, config)
        if not edits:
            if stats is not None:
                stats[f"infeasible:{kind}"] += 1
            continue
        child = edits[int(rng.integers(len(edits)))]()
        if is_acceptable(child, config.size_cap):
            if stats is not None:
                stats[f"mutate:{kind}"] += 1
            return child, kind
        if stats is not None:
            stats[f"rejected:{kind}"] += 1
    if stats is not None:
        stats["mutate:identity"] += 1
    return parent, None


def mutate(parent: MolGraph, rng: np.random.Generator, config: OperatorConfig = DEFAULT_CONFIG) -> MolGraph:
    return mutate_detailed(parent, rng, config)[0]


def cut_bonds(g: MolGraph) -> list[Bond]:
    """Non-ring single bonds, the admissible crossover cut points."""
    br = bridges(g)
    return [b for b in g.bonds if b.order == 1 and b.pair in br]


def _fragment(g: MolGraph, cut: Bond, keep: int) -> list[int]:
    seen = {keep}
    stack = [keep]
    while stack:
        v = stack.pop()
        for w, _ in g.adjacency[v]:
            if {v, w} == {cut.i, cut.j} or w in seen:
                continue
            seen.add(w)
            stack.append(w)
    return sorted(seen)


def crossover_outcomes(a: MolGraph, b: MolGraph) -> list[MolGraph]:
    """Every graph a single cut-and-join can produce, in enumeration order."""
    out = []
    for ca in cut_bonds(a):
        for keep_a in ca.pair:
            for cb in cut_bonds(b):
                for keep_b in cb.pair:
                    out.append(_join(a, _fragment(a, ca, keep_a), keep_a, b, _fragment(b, cb, keep_b), keep_b))
    return out


def _join(a: MolGraph, frag_a: list[int], attach_a: int, b: MolGraph, frag_b: list[int], attach_b: int) -> MolGraph:
    ia = {old: new for new, old in enumerate(frag_a)}
    ib = {old: new + len(frag_a) for new, old in enumerate(frag_b)}
    atoms = tuple(a.atoms[i] for i in frag_a) + tuple(b.atoms[i] for i in frag_b)
    bonds = [Bond(ia[x.i], ia[x.j], x.order) for x in a.bonds if x.i in ia and x.j in ia]
    bonds += [Bond(ib[x.i], ib[x.j], x.order) for x in b.bonds if x.i in ib and x.j in ib]
    bonds.append(Bond(ia[attach_a], ib[attach_b], 1))
    return MolGraph(atoms, tuple(bonds))


def crossover_detailed(
    parent_a: MolGraph,
    parent_b: MolGraph,
    rng: np.random.Generator,
    config: OperatorConfig = DEFAULT_CONFIG,
    stats: Counter | None = None,
) -> tuple[MolGraph, str]:
    """Cut a non-ring single bond in each parent and join one fragment of each.

    Returns (child, label) where label is ``"crossover"`` or, when no cut is
    possible within the retry budget, ``"crossover_fallback"`` followed by the
    mutation applied to ``parent_a``.
    """
    cuts_a = cut_bonds(parent_a) if len(parent_a.atoms) >= 2 else []
    cuts_b = cut_bonds(parent_b) if len(parent_b.atoms) >= 2 else []
    if cuts_a and cuts_b:
        for _ in range(config.max_retries):
            ca = cuts_a[int(rng.integers(len(cuts_a)))]
            keep_a = ca.pair[int(rng.integers(2))]
            cb = cuts_b[int(rng.integers(len(cuts_b)))]
            keep_b = cb.pair[int(rng.integers(2))]
            frag_a = _fragment(parent_a, ca, keep_a)
            frag_b = _fragment(parent_b, cb, keep_b)
            if len(frag_a) + len(frag_b) > config.size_cap:
                continue
            child = _join(parent_a, frag_a, keep_a, parent_b, frag_b, keep_b)
            if is_acceptable(child, config.size_cap):
                if stats is not None:
                    stats["crossover"] += 1
                return child, "crossover"
    if stats is not None:
        stats["crossover_fallback"] += 1
    child, kind = mutate_detailed(parent_a, rng, config, stats)
    return child, f"crossover_fallback:mutate:{kind or 'identity'}"


def crossover(parent_a: MolGraph, parent_b: MolGraph, rng: np.random.Generator, config: OperatorConfig = DEFAULT_CONFIG) -> MolGraph:
    return crossover_detailed(parent_a, parent_b, rng, config)[0]


def reproduce(
    parent_a: MolGraph,
    parent_b: MolGraph,
    rng: np.random.Generator,
    config: OperatorConfig = DEFAULT_CONFIG,
    stats: Counter | None = None,
) -> tuple[MolGraph, str]:
    """One offspring: crossover (then maybe mutation) or a plain mutation of ``parent_a``."""
    if rng.random() < config.crossover_prob:
        child, label = crossover_detailed(parent_a, parent_b, rng, config, stats)
        if label == "crossover" and rng.random() < config.mutate_after_crossover:
            child, kind = mutate_detailed(child, rng, config, stats)
            label += f"+mutate:{kind or 'identity'}"
        return child, label
    child, kind = mutate_detailed(parent_a, rng, config, stats)
    return child, f"mutate:{kind or 'identity'}"


@dataclass
class OffspringBatch:
    molecules: list[MolGraph]
    provenance: list[tuple[str, tuple[str, ...]]]  # (operator label, parent ids)


def generate_offspring(
    parents: Sequence[MolGraph],
    rngs: Sequence[np.random.Generator],
    config: OperatorConfig = DEFAULT_CONFIG,
    parent_ids: Sequence[str] | None = None,
    stats: Counter | None = None,
) -> OffspringBatch:
    """Child ``i`` is bred from ``parents[2i]`` and ``parents[2i+1]`` using ``rngs[i]``.

    One generator per child keeps the batch reproducible whatever order
    (or thread) the children are produced in.
    """
    k = len(rngs)
    if len(parents) < 2 * k:
        raise ValueError(f"need {2 * k} parents for {k} offspring, got {len(parents)}")
    ids = list(parent_ids) if parent_ids is not None else [""] * len(parents)
    batch = OffspringBatch([], [])
    for i, rng in enumerate(rngs):
        a, b = parents[2 * i], parents[2 * i + 1]
        child, label = reproduce(a, b, rng, config, stats)
        used = (ids[2 * i], ids[2 * i + 1]) if label.startswith("crossover") and "fallback" not in label else (ids[2 * i],)
        batch.molecules.append(child)
        batch.provenance.append((label, used))
    return batch


def add_carbon(reference: MolGraph, rng: np.random.Generator, size_cap: int = MAX_HEAVY_ATOMS) -> MolGraph:
    """Attach one carbon by a single bond to a uniformly chosen atom that has a hydrogen to give up."""
    sites = [i for i in range(len(reference.atoms)) if reference.free_valence(i) >= 1]
    if not sites:
        raise NoFreeValence("no atom can accept a new single bond")
    if len(reference.atoms) + 1 > size_cap:
        raise SizeLimitExceeded(f"AddCarbon would exceed {size_cap} heavy atoms")
    i = sites[int(rng.integers(len(sites)))]
    n = len(reference.atoms)
    return reference.with_changes(atoms=reference.atoms + (Atom("C"),), bonds=reference.bonds + (Bond(i, n, 1),))
