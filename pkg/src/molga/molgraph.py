"""Molecular graph model: atoms, bonds, valence rules and canonical labeling.

Hydrogens are never graph nodes. Each atom either carries a fixed hydrogen
count (bracket atoms such as ``[nH]``) or has its hydrogens derived from the
valence table below.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import InvalidMolecule, ValenceViolation

SUPPORTED_ELEMENTS = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
MAX_HEAVY_ATOMS = 120
MAX_CHARGE = 2

# Neutral valences. Nitrogen is deliberately restricted to 3.
NEUTRAL_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

_VALENCE_ELECTRONS = {"B": 3, "C": 4, "N": 5, "O": 6, "P": 5, "S": 6, "F": 7, "Cl": 7, "Br": 7, "I": 7}
_SECOND_PERIOD = {"B", "C", "N", "O", "F"}


def _charged_valences(element: str, charge: int) -> tuple[int, ...]:
    # A charged atom takes the valences of its isoelectronic neutral analogue:
    # N+ ~ C (4), O+ ~ N (3), C- ~ N (3), O- ~ F (1), C+ ~ B (3), F- ~ Ne (0).
    # Halogens never expand their octet; period-3+ atoms with 5 or 6 valence
    # electrons keep the P/S expanded valences.
    electrons = _VALENCE_ELECTRONS[element] - charge
    if electrons <= 0:
        return ()
    if electrons <= 4:
        return (electrons,)
    if electrons >= 8:
        return (0,)
    if electrons == 7:
        return (1,)
    expanded = element not in _SECOND_PERIOD and _VALENCE_ELECTRONS[element] < 7
    if electrons == 5:
        return (3, 5) if expanded else (3,)
    return (2, 4, 6) if expanded else (2,)


# Single source of truth for allowed valences, keyed by (element, formal charge).
VALENCE_TABLE: dict[tuple[str, int], tuple[int, ...]] = {
    (el, q): _charged_valences(el, q)
    for el in SUPPORTED_ELEMENTS
    for q in range(-MAX_CHARGE, MAX_CHARGE + 1)
}
assert all(VALENCE_TABLE[el, 0] == v for el, v in NEUTRAL_VALENCES.items())


def allowed_valences(element: str, charge: int = 0) -> tuple[int, ...]:
    try:
        return VALENCE_TABLE[element, charge]
    except KeyError:
        raise InvalidMolecule(f"unsupported atom {element} with charge {charge}") from None


def default_hydrogens(element: str, charge: int, bond_sum: int) -> int | None:
    """Hydrogens implied by the smallest allowed valence >= ``bond_sum``, or None."""
    for v in allowed_valences(element, charge):
        if v >= bond_sum:
            return v - bond_sum
    return None


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    # None: hydrogens follow the valence table. An int: fixed (bracket) count.
    explicit_h: int | None = None
    aromatic: bool = False

    def __post_init__(self):
        if self.element not in SUPPORTED_ELEMENTS:
            raise InvalidMolecule(f"unsupported element {self.element!r}")
        if not -MAX_CHARGE <= self.formal_charge <= MAX_CHARGE:
            raise InvalidMolecule(f"formal charge {self.formal_charge} out of range")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise InvalidMolecule("negative hydrogen count")


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order: int = 1

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidMolecule(f"self bond on atom {self.i}")
        if self.order not in (1, 2, 3):
            raise InvalidMolecule(f"bad bond order {self.order}")
        if self.i > self.j:
            a, b = self.j, self.i
            object.__setattr__(self, "i", a)
            object.__setattr__(self, "j", b)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)


@dataclass(frozen=True, eq=False)
class MolGraph:
    """Immutable molecular graph. Equality is structural on the stored lists,
    not isomorphism; compare :func:`canonical_form` for chemical identity."""

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        n = len(self.atoms)
        if n < 1:
            raise InvalidMolecule("a molecule needs at least one atom")
        seen = set()
        for b in self.bonds:
            if b.j >= n or b.i < 0:
                raise InvalidMolecule(f"bond {b.pair} out of range for {n} atoms")
            if b.pair in seen:
                raise InvalidMolecule(f"duplicate bond {b.pair}")
            seen.add(b.pair)

    def __eq__(self, other):
        if not isinstance(other, MolGraph):
            return NotImplemented
        return self.atoms == other.atoms and set(self.bonds) == set(other.bonds)

    def __hash__(self):
        return hash((self.atoms, frozenset(self.bonds)))

    def __len__(self):
        return len(self.atoms)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom: tuple of (neighbor, bond order), neighbors ascending."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            adj[b.i].append((b.j, b.order))
            adj[b.j].append((b.i, b.order))
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def bond_lookup(self) -> dict[tuple[int, int], int]:
        return {b.pair: b.order for b in self.bonds}

    def bond_order(self, i: int, j: int) -> int:
        """Order of the bond between ``i`` and ``j``; 0 when unbonded."""
        return self.bond_lookup.get((min(i, j), max(i, j)), 0)

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @cached_property
    def bond_sums(self) -> tuple[int, ...]:
        return tuple(sum(o for _, o in nb) for nb in self.adjacency)

    def bond_sum(self, i: int) -> int:
        return self.bond_sums[i]

    @cached_property
    def hydrogens(self) -> tuple[int, ...]:
        """Total hydrogen count per atom. Raises ValenceViolation if any atom is invalid."""
        return tuple(implicit_hydrogens(self, i) + (a.explicit_h or 0) for i, a in enumerate(self.atoms))

    @cached_property
    def valence_ok(self) -> bool:
        if any(a.aromatic for a in self.atoms):
            return False
        try:
            self.hydrogens
        except ValenceViolation:
            return False
        return True

    def free_valence(self, i: int) -> int:
        """Bonds atom ``i`` can still accept by giving up hydrogens (0 for fixed-H atoms)."""
        if self.atoms[i].explicit_h is not None:
            return 0
        return self.hydrogens[i]

    def with_changes(self, atoms=None, bonds=None) -> "MolGraph":
        return MolGraph(self.atoms if atoms is None else atoms, self.bonds if bonds is None else bonds)

    def __repr__(self):
        try:
            from .smiles import write

            return f"MolGraph({write(self)!r})"
        except Exception:
            return f"MolGraph(<{len(self.atoms)} atoms, {len(self.bonds)} bonds>)"


def implicit_hydrogens(g: MolGraph, atom_index: int) -> int:
    """Hydrogens implied by the valence table for one atom.

    Atoms with a stated hydrogen count get 0 implicit hydrogens, provided the
    stated count plus the bond orders lands on an allowed valence.
    """
    atom = g.atoms[atom_index]
    bsum = g.bond_sum(atom_index)
    if atom.explicit_h is not None:
        if bsum + atom.explicit_h not in allowed_valences(atom.element, atom.formal_charge):
            raise ValenceViolation(
                f"atom {atom_index} ({atom.element}, charge {atom.formal_charge}) has "
                f"bond sum {bsum} + {atom.explicit_h} H, not an allowed valence"
            )
        return 0
    h = default_hydrogens(atom.element, atom.formal_charge, bsum)
    if h is None:
        raise ValenceViolation(
            f"atom {atom_index} ({atom.element}, charge {atom.formal_charge}) exceeds "
            f"max valence with bond sum {bsum}"
        )
    return h


def check_valence(g: MolGraph) -> bool:
    return g.valence_ok


def molecular_formula(g: MolGraph) -> dict[str, int]:
    if not check_valence(g):
        raise InvalidMolecule("valence check failed")
    counts = Counter(a.element for a in g.atoms)
    h = sum(g.hydrogens)
    if h:
        counts["H"] = h
    return dict(counts)


def formula_string(formula: dict[str, int]) -> str:
    """Hill-order formula string, e.g. ``C7H8N2O2``."""
    keys = sorted(formula)
    if "C" in formula:
        keys = ["C"] + (["H"] if "H" in formula else []) + [k for k in keys if k not in ("C", "H")]
    return "".join(k + (str(formula[k]) if formula[k] != 1 else "") for k in keys if formula[k])


def parse_formula(text: str) -> dict[str, int]:
    import re

    if not re.fullmatch(r"([A-Z][a-z]?\d*)+", text):
        raise ValueError(f"malformed formula {text!r}")
    out: Counter = Counter()
    for el, n in re.findall(r"([A-Z][a-z]?)(\d*)", text):
        out[el] += int(n) if n else 1
    return dict(out)


# --- graph structure -------------------------------------------------------


def connected_components(g: MolGraph) -> list[list[int]]:
    seen = [False] * len(g.atoms)
    comps = []
    for s in range(len(g.atoms)):
        if seen[s]:
            continue
        seen[s] = True
        stack, comp = [s], []
        while stack:
            v = stack.pop()
            comp.append(v)
            for w, _ in g.adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def is_connected(g: MolGraph) -> bool:
    return len(connected_components(g)) == 1


def bridges(g: MolGraph) -> set[tuple[int, int]]:
    """Bonds whose removal disconnects the graph (iterative Tarjan)."""
    n = len(g.atoms)
    disc = [-1] * n
    low = [0] * n
    out: set[tuple[int, int]] = set()
    t = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(g.adjacency[root]))]
        while stack:
            v, parent, it = stack[-1]
            for w, _ in it:
                if w == parent:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = t
                    t += 1
                    stack.append((w, v, iter(g.adjacency[w])))
                    break
                low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        out.add((min(v, parent), max(v, parent)))
    return out


def ring_bonds(g: MolGraph) -> set[tuple[int, int]]:
    br = bridges(g)
    return {b.pair for b in g.bonds if b.pair not in br}


def ring_count(g: MolGraph) -> int:
    """Cycle rank (number of independent rings)."""
    return len(g.bonds) - len(g.atoms) + len(connected_components(g))


def shortest_path_lengths(g: MolGraph, source: int) -> list[int]:
    dist = [-1] * len(g.atoms)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for v in frontier:
            for w, _ in g.adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def permute(g: MolGraph, perm: Sequence[int]) -> MolGraph:
    """Relabel atoms so that old atom ``i`` becomes new atom ``perm[i]``."""
    n = len(g.atoms)
    if sorted(perm) != list(range(n)):
        raise ValueError("perm is not a permutation of the atom indices")
    atoms = [None] * n
    for old, new in enumerate(perm):
        atoms[new] = g.atoms[old]
    bonds = [Bond(perm[b.i], perm[b.j], b.order) for b in g.bonds]
    return MolGraph(tuple(atoms), tuple(sorted(bonds, key=lambda b: b.pair)))


def subgraph(g: MolGraph, keep: Iterable[int]) -> tuple[MolGraph, dict[int, int]]:
    """Induced subgraph on ``keep`` (order preserved) plus the old->new index map."""
    keep = sorted(set(keep))
    index = {old: new for new, old in enumerate(keep)}
    atoms = tuple(g.atoms[i] for i in keep)
    bonds = tuple(Bond(index[b.i], index[b.j], b.order) for b in g.bonds if b.i in index and b.j in index)
    return MolGraph(atoms, bonds), index


# --- canonical labeling ----------------------------------------------------

# Above this many search leaves the best string found so far is returned.
# Automorphism pruning keeps real molecules far below it.
MAX_CANON_LEAVES = 20000


@dataclass(frozen=True)
class CanonicalForm:
    """Isomorphism-invariant identity of a molecule.

    ``key`` is the lexicographically smallest atom-ordering serialization and
    ``string`` the SMILES written in that ordering; both are canonical, and
    equality and hashing use ``string``.
    """

    string: str
    key: str = field(compare=False, repr=False)
    order: tuple[int, ...] = field(compare=False, repr=False)

    def __str__(self):
        return self.string


def refine_classes(g: MolGraph) -> list[int]:
    """Morgan-style iterative refinement to a stable, permutation-invariant ranking."""
    hyd = g.hydrogens
    adj = g.adjacency
    inv = [
        (a.element, a.formal_charge, hyd[i], len(adj[i]), tuple(sorted(o for _, o in adj[i])))
        for i, a in enumerate(g.atoms)
    ]
    ranks = _dense_rank(inv)
    n_classes = len(set(ranks))
    while True:
        sig = [(ranks[v], tuple(sorted((ranks[w], o) for w, o in adj[v]))) for v in range(len(ranks))]
        new = _dense_rank(sig)
        k = len(set(new))
        if k == n_classes:
            return ranks
        ranks, n_classes = new, k


def _dense_rank(values: list) -> list[int]:
    lookup = {v: r for r, v in enumerate(sorted(set(values)))}
    return [lookup[v] for v in values]


def _atom_label(g: MolGraph, ranks: Sequence[int], v: int) -> str:
    a = g.atoms[v]
    return f"{ranks[v]:03d}{a.element:<2}{a.formal_charge + MAX_CHARGE}{g.hydrogens[v]}"


def _token(g: MolGraph, ranks: Sequence[int], pos: Sequence[int], v: int) -> str:
    # Fixed-width fields plus a terminator that occurs nowhere else make the
    # tokens prefix-free, so comparing joined strings == comparing token lists.
    back = sorted((pos[w], o) for w, o in g.adjacency[v] if pos[w] >= 0)
    first = back[0][0] if back else 999
    return f"{first:03d}{_atom_label(g, ranks, v)}" + "".join(f"{j:03d}{o}" for j, o in back) + "/"


def serialization(g: MolGraph, order: Sequence[int], ranks: Sequence[int] | None = None) -> str:
    """Serialize ``g`` with atoms listed in ``order`` (order[k] = atom at position k).

    The canonical key is the minimum of this string over all orderings.
    """
    if ranks is None:
        ranks = refine_classes(g)
    pos = [-1] * len(g.atoms)
    parts = []
    for k, v in enumerate(order):
        parts.append(_token(g, ranks, pos, v))
        pos[v] = k
    return "".join(parts)


def _canonical_order(g: MolGraph, ranks: Sequence[int]) -> tuple[str, list[int]]:
    n = len(g.atoms)
    adj = g.adjacency
    order: list[int] = []
    pos = [-1] * n
    tokens: list[str] = []
    best: dict = {"tokens": None, "order": None, "version": 0, "leaves": 0}
    autos: list[list[int]] = []

    def candidates(ptr: int) -> tuple[int, list[int]]:
        while ptr < len(order) and all(pos[w] >= 0 for w, _ in adj[order[ptr]]):
            ptr += 1
        if ptr < len(order):
            return ptr, [w for w, _ in adj[order[ptr]] if pos[w] < 0]
        return ptr, [v for v in range(n) if pos[v] < 0]

    def orbit_roots(k: int) -> list[int]:
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        fixed = order[:k]
        for gamma in autos:
            if all(gamma[v] == v for v in fixed):
                for x in range(n):
                    a, b = find(x), find(gamma[x])
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        return [find(x) for x in range(n)]

    def recurse(ptr: int, less: bool) -> None:
        k = len(order)
        if k == n:
            best["leaves"] += 1
            if best["tokens"] is None or less or tokens < best["tokens"]:
                best["tokens"] = list(tokens)
                best["order"] = list(order)
                best["version"] += 1
            elif tokens == best["tokens"]:
                gamma = [0] * n
                for a, b in zip(best["order"], order):
                    gamma[a] = b
                autos.append(gamma)
            return
        ptr, cands = candidates(ptr)
        # Within one call every candidate shares the first token field, so the
        # refined rank is the next discriminator; full tokens only for rank ties.
        rmin = min(ranks[c] for c in cands)
        cands = [c for c in cands if ranks[c] == rmin]
        toks = {c: _token(g, ranks, pos, c) for c in cands}
        tmin = min(toks.values())
        if not less and best["tokens"] is not None:
            ref = best["tokens"][k]
            if tmin > ref:
                return
            less = tmin < ref
        tied = sorted(c for c in cands if toks[c] == tmin)
        explored: list[int] = []
        for c in tied:
            if best["leaves"] >= MAX_CANON_LEAVES:
                return
            if explored and autos:
                roots = orbit_roots(k)
                if any(roots[c] == roots[e] for e in explored):
                    continue
            version = best["version"]
            order.append(c)
            pos[c] = k
            tokens.append(tmin)
            recurse(ptr, less)
            tokens.pop()
            pos[c] = -1
            order.pop()
            explored.append(c)
            if best["version"] != version:
                # The new best shares this prefix.
                less = False

    recurse(0, True)
    return "".join(best["tokens"]), best["order"]


def canonical_form(g: MolGraph) -> CanonicalForm:
    cached = g.__dict__.get("_canonical")
    if cached is not None:
        return cached
    if not check_valence(g):
        raise InvalidMolecule("cannot canonicalize a molecule that fails the valence check")
    ranks = refine_classes(g)
    key, order = _canonical_order(g, ranks)
    from .smiles import write_ordered

    position = [0] * len(order)
    for k, v in enumerate(order):
        position[v] = k
    form = CanonicalForm(write_ordered(g, position), key, tuple(order))
    g.__dict__["_canonical"] = form
    return form


def canonical_smiles(g: MolGraph) -> str:
    return canonical_form(g).string


def is_isomorphic(a: MolGraph, b: MolGraph) -> bool:
    return canonical_form(a).key == canonical_form(b).key
