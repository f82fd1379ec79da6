import itertools

import numpy as np
import pytest

from molga.benchmark import bundled_reference
from molga.molgraph import Atom, Bond, MolGraph, allowed_valences, check_valence, is_connected

ELEMENTS = ("C", "C", "C", "C", "N", "N", "O", "O", "S", "P", "F", "Cl", "Br", "I", "B")


def random_molgraph(rng: np.random.Generator, n_atoms: int, max_extra_bonds: int = 2) -> MolGraph:
    """A random connected graph that passes the valence check.

    Built independently of the genetic operators: random tree, a few extra
    ring bonds, random orders, then orders are lowered until every atom fits.
    """
    while True:
        pairs = {}
        for i in range(1, n_atoms):
            pairs[(int(rng.integers(i)), i)] = 1
        if n_atoms >= 3:
            for _ in range(int(rng.integers(max_extra_bonds + 1))):
                i, j = sorted(rng.choice(n_atoms, size=2, replace=False).tolist())
                pairs.setdefault((i, j), 1)
        degree = [0] * n_atoms
        for i, j in pairs:
            degree[i] += 1
            degree[j] += 1
        atoms = []
        for d in degree:
            el, charge = ELEMENTS[rng.integers(len(ELEMENTS))], 0
            if el in ("N", "O") and rng.random() < 0.1:
                charge = 1 if el == "N" else int(rng.choice([-1, 1]))
            if max(allowed_valences(el, charge), default=0) < d:
                el, charge = ("C", 0) if d <= 4 else ("S", 0)
            atoms.append(Atom(el, charge))
        for p in pairs:
            pairs[p] = int(rng.choice([1, 1, 1, 2, 3]))
        g = MolGraph(tuple(atoms), tuple(Bond(i, j, o) for (i, j), o in pairs.items()))
        for _ in range(3 * len(pairs)):
            if check_valence(g):
                break
            heavy = [b for b in g.bonds if b.order > 1]
            if not heavy:
                break
            b = heavy[rng.integers(len(heavy))]
            g = MolGraph(g.atoms, tuple(Bond(x.i, x.j, x.order - 1) if x == b else x for x in g.bonds))
        if check_valence(g) and is_connected(g):
            return g


def random_permutation(rng: np.random.Generator, n: int) -> list[int]:
    return rng.permutation(n).tolist()


def brute_force_isomorphic(a: MolGraph, b: MolGraph) -> bool:
    if len(a.atoms) != len(b.atoms) or len(a.bonds) != len(b.bonds):
        return False
    ha, hb = a.hydrogens, b.hydrogens
    label_a = [(x.element, x.formal_charge, ha[i]) for i, x in enumerate(a.atoms)]
    label_b = [(x.element, x.formal_charge, hb[i]) for i, x in enumerate(b.atoms)]
    if sorted(label_a) != sorted(label_b):
        return False
    eb = {(x.i, x.j): x.order for x in b.bonds}
    for perm in itertools.permutations(range(len(a.atoms))):
        if any(label_a[i] != label_b[perm[i]] for i in range(len(perm))):
            continue
        if all(eb.get(tuple(sorted((perm[x.i], perm[x.j])))) == x.order for x in a.bonds):
            return True
    return False


@pytest.fixture(scope="session")
def reference():
    return bundled_reference()


@pytest.fixture(scope="session")
def reference_graphs(reference):
    return reference.molecules
