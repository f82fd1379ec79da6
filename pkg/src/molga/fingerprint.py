"""Circular (Morgan/ECFP-style) set fingerprints and Tanimoto similarity."""

from __future__ import annotations

import hashlib
import struct

from .errors import EmptyFingerprint, InvalidMolecule
from .molgraph import MolGraph, check_valence

# Fixed key so identifiers are stable across processes and platforms
# (Python's built-in hash() is salted per process).
HASH_SEED = b"molga-ecfp-v1"
DEFAULT_RADIUS = 2

Fingerprint = frozenset  # of 64-bit unsigned ints


def _h64(payload: str) -> int:
    digest = hashlib.blake2b(payload.encode(), digest_size=8, key=HASH_SEED).digest()
    return struct.unpack("<Q", digest)[0]


def atom_environments(g: MolGraph, radius: int = DEFAULT_RADIUS) -> list[list[int]]:
    """Identifiers per iteration: ``out[r][v]`` encodes the radius-r environment of atom v."""
    hyd = g.hydrogens
    adj = g.adjacency
    current = [
        _h64(f"0|{a.element}|{a.formal_charge}|{hyd[i]}|{len(adj[i])}|{','.join(str(o) for o in sorted(o for _, o in adj[i]))}")
        for i, a in enumerate(g.atoms)
    ]
    out = [current]
    for r in range(1, radius + 1):
        prev = out[-1]
        current = [
            _h64(f"{r}|{prev[v]}|" + ";".join(f"{o}:{h}" for o, h in sorted((o, prev[w]) for w, o in adj[v])))
            for v in range(len(g.atoms))
        ]
        out.append(current)
    return out


def morgan_fingerprint(g: MolGraph, radius: int = DEFAULT_RADIUS) -> frozenset[int]:
    if not 1 <= radius <= 4:
        raise ValueError(f"radius must be in [1, 4], got {radius}")
    if not check_valence(g):
        raise InvalidMolecule("cannot fingerprint a molecule that fails the valence check")
    return frozenset(x for layer in atom_environments(g, radius) for x in layer)


def tanimoto(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        raise EmptyFingerprint("tanimoto needs two nonempty fingerprints")
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)
