"""SMILES reader and writer for the organic subset.

Aromatic (lowercase) input is kekulized while parsing; the writer only ever
emits explicit single/double/triple bonds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import (
    KekulizationFailure,
    MultipleComponents,
    SizeLimitExceeded,
    SmilesSyntaxError,
    UnsupportedFeature,
    ValenceViolation,
)
from .molgraph import (
    MAX_HEAVY_ATOMS,
    SUPPORTED_ELEMENTS,
    Atom,
    Bond,
    MolGraph,
    allowed_valences,
    bridges,
    check_valence,
    default_hydrogens,
    implicit_hydrogens,
)
from .errors import InvalidMolecule

ORGANIC = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
BOND_SYMBOLS = {"-": 1, "=": 2, "#": 3, ":": "aromatic"}
_ORDER_SYMBOL = {1: "", 2: "=", 3: "#"}
# str.isdigit accepts things like "²"; SMILES digits are ASCII only.
_DIGITS = frozenset("0123456789")


@dataclass(frozen=True)
class SmilesToken:
    kind: str  # organic_atom | bracket_atom | bond | ring_closure_digit | branch_open | branch_close
    text: str
    offset: int
    payload: object = None


def tokenize(text: str) -> list[SmilesToken]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "[":
            end = text.find("]", i)
            if end < 0:
                raise SmilesSyntaxError("unterminated bracket atom", i)
            tokens.append(SmilesToken("bracket_atom", text[i : end + 1], i, _parse_bracket(text, i, end)))
            i = end + 1
        elif text.startswith(("Cl", "Br"), i):
            tokens.append(SmilesToken("organic_atom", text[i : i + 2], i, (text[i : i + 2], False)))
            i += 2
        elif ch in ORGANIC:
            tokens.append(SmilesToken("organic_atom", ch, i, (ch, False)))
            i += 1
        elif ch in AROMATIC:
            tokens.append(SmilesToken("organic_atom", ch, i, (AROMATIC[ch], True)))
            i += 1
        elif ch in BOND_SYMBOLS:
            tokens.append(SmilesToken("bond", ch, i, BOND_SYMBOLS[ch]))
            i += 1
        elif ch in _DIGITS:
            tokens.append(SmilesToken("ring_closure_digit", ch, i, int(ch)))
            i += 1
        elif ch == "%":
            digits = text[i + 1 : i + 3]
            if len(digits) != 2 or not all(d in _DIGITS for d in digits):
                raise SmilesSyntaxError("'%' must be followed by two digits", i)
            tokens.append(SmilesToken("ring_closure_digit", text[i : i + 3], i, int(digits)))
            i += 3
        elif ch == "(":
            tokens.append(SmilesToken("branch_open", ch, i))
            i += 1
        elif ch == ")":
            tokens.append(SmilesToken("branch_close", ch, i))
            i += 1
        elif ch == ".":
            raise MultipleComponents(f"dot-disconnected SMILES at offset {i}")
        elif ch in "/\\":
            raise UnsupportedFeature(f"double-bond stereo mark {ch!r} at offset {i}")
        elif ch == "$":
            raise UnsupportedFeature(f"quadruple bond at offset {i}")
        elif ch == "*":
            raise UnsupportedFeature(f"wildcard atom at offset {i}")
        else:
            raise SmilesSyntaxError(f"unexpected character {ch!r}", i)
    return tokens


def _parse_bracket(text: str, start: int, end: int):
    """Return (element, aromatic, charge, hcount) for text[start:end+1] == '[...]'."""
    body = text[start + 1 : end]
    i = 0
    if i < len(body) and body[i] in _DIGITS:
        raise UnsupportedFeature(f"isotope label at offset {start + 1}")
    if i >= len(body):
        raise SmilesSyntaxError("empty bracket atom", start)
    ch = body[i]
    if ch == "*":
        raise UnsupportedFeature(f"wildcard atom at offset {start + 1}")
    if ch.isupper():
        sym = ch
        if i + 1 < len(body) and body[i + 1].islower():
            sym = body[i : i + 2]
        i += len(sym)
        if sym not in SUPPORTED_ELEMENTS:
            raise UnsupportedFeature(f"element {sym!r} at offset {start + 1}")
        element, aromatic = sym, False
    elif ch.islower():
        if i + 1 < len(body) and body[i + 1].islower():
            raise UnsupportedFeature(f"aromatic element {body[i:i + 2]!r} at offset {start + 1}")
        if ch not in AROMATIC:
            raise SmilesSyntaxError(f"bad aromatic symbol {ch!r}", start + 1)
        element, aromatic = AROMATIC[ch], True
        i += 1
    else:
        raise SmilesSyntaxError(f"bad bracket atom {body!r}", start)
    if i < len(body) and body[i] == "@":
        raise UnsupportedFeature(f"chirality mark at offset {start + 1 + i}")
    hcount = 0
    if i < len(body) and body[i] == "H":
        i += 1
        j = i
        while j < len(body) and body[j] in _DIGITS:
            j += 1
        hcount = int(body[i:j]) if j > i else 1
        i = j
    charge = 0
    if i < len(body) and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        j = i + 1
        if j < len(body) and body[j] in _DIGITS:
            k = j
            while k < len(body) and body[k] in _DIGITS:
                k += 1
            charge = sign * int(body[j:k])
            j = k
        else:
            charge = sign
            while j < len(body) and body[j] == body[i]:
                charge += sign
                j += 1
        i = j
    if i < len(body) and body[i] == ":":
        raise UnsupportedFeature(f"atom class at offset {start + 1 + i}")
    if i != len(body):
        raise SmilesSyntaxError(f"unexpected {body[i]!r} in bracket atom", start + 1 + i)
    if abs(charge) > 2:
        raise UnsupportedFeature(f"formal charge {charge:+d} outside [-2, +2]")
    if hcount > 9:
        raise UnsupportedFeature(f"hydrogen count {hcount} too large")
    return element, aromatic, charge, hcount


def parse(text: str) -> MolGraph:
    """Parse a SMILES string into a valid, kekulized MolGraph."""
    if not isinstance(text, str):
        raise TypeError("SMILES must be a str")
    if not text:
        raise SmilesSyntaxError("empty SMILES", 0)
    tokens = tokenize(text)
    atoms: list[Atom] = []
    bonds: dict[tuple[int, int], object] = {}  # pair -> order | "aromatic" | None (default)
    branch: list[int] = []
    rings: dict[int, tuple[int, object, int]] = {}
    prev: int | None = None
    pending: SmilesToken | None = None

    def add_bond(a: int, b: int, order, offset: int):
        if a == b:
            raise SmilesSyntaxError("ring closure to the same atom", offset)
        key = (min(a, b), max(a, b))
        if key in bonds:
            raise SmilesSyntaxError("duplicate bond between the same atoms", offset)
        bonds[key] = order

    for tok in tokens:
        if tok.kind in ("organic_atom", "bracket_atom"):
            if tok.kind == "organic_atom":
                element, aromatic = tok.payload
                atom = Atom(element, 0, None, aromatic)
            else:
                element, aromatic, charge, hcount = tok.payload
                atom = Atom(element, charge, hcount, aromatic)
            atoms.append(atom)
            idx = len(atoms) - 1
            if len(atoms) > MAX_HEAVY_ATOMS:
                raise SizeLimitExceeded(f"more than {MAX_HEAVY_ATOMS} heavy atoms")
            if prev is not None:
                add_bond(prev, idx, pending.payload if pending else None, tok.offset)
            elif pending is not None:
                raise SmilesSyntaxError("bond with no preceding atom", pending.offset)
            pending = None
            prev = idx
        elif tok.kind == "bond":
            if prev is None or pending is not None:
                raise SmilesSyntaxError("misplaced bond symbol", tok.offset)
            pending = tok
        elif tok.kind == "ring_closure_digit":
            if prev is None:
                raise SmilesSyntaxError("ring closure before any atom", tok.offset)
            rid = tok.payload
            order = pending.payload if pending else None
            if rid in rings:
                other, other_order, _ = rings.pop(rid)
                if order is not None and other_order is not None and order != other_order:
                    raise SmilesSyntaxError(f"conflicting bond orders on ring closure {rid}", tok.offset)
                add_bond(other, prev, order if order is not None else other_order, tok.offset)
            else:
                rings[rid] = (prev, order, tok.offset)
            pending = None
        elif tok.kind == "branch_open":
            if prev is None or pending is not None:
                raise SmilesSyntaxError("misplaced '('", tok.offset)
            branch.append(prev)
        else:  # branch_close
            if not branch or pending is not None:
                raise SmilesSyntaxError("unmatched or dangling ')'", tok.offset)
            prev = branch.pop()
    if pending is not None:
        raise SmilesSyntaxError("dangling bond symbol", pending.offset)
    if branch:
        raise SmilesSyntaxError("unclosed '('", len(text))
    if rings:
        rid, (_, _, off) = next(iter(rings.items()))
        raise SmilesSyntaxError(f"unclosed ring {rid}", off)
    if not atoms:
        raise SmilesSyntaxError("no atoms", 0)
    # A ':' bond between non-aromatic atoms is treated as a plain single bond.
    graph = MolGraph(
        tuple(atoms),
        tuple(Bond(a, b, o if isinstance(o, int) else 1) for (a, b), o in sorted(bonds.items())),
    )
    ring_pairs = {b.pair for b in graph.bonds} - bridges(graph)
    aromatic_bonds = set()
    for (a, b), o in bonds.items():
        if atoms[a].aromatic and atoms[b].aromatic:
            if o == "aromatic" or (o is None and (a, b) in ring_pairs):
                aromatic_bonds.add((a, b))
    graph = kekulize(graph, aromatic_bonds)
    return _normalize_hydrogens(graph)


def _normalize_hydrogens(g: MolGraph) -> MolGraph:
    """Validate, then drop stated H counts that the valence table would imply anyway."""
    atoms = list(g.atoms)
    for i, a in enumerate(atoms):
        implicit_hydrogens(g, i)  # raises ValenceViolation
        if a.explicit_h is not None and default_hydrogens(a.element, a.formal_charge, g.bond_sum(i)) == a.explicit_h:
            atoms[i] = Atom(a.element, a.formal_charge, None)
    return g.with_changes(atoms=tuple(atoms))


def _needs_double(g: MolGraph, i: int, n_aromatic: int) -> bool:
    atom = g.atoms[i]
    base = g.bond_sum(i)  # aromatic bonds currently stored as single
    vals = allowed_valences(atom.element, atom.formal_charge)
    if atom.explicit_h is not None:
        total = base + atom.explicit_h
        if total in vals:
            return False
        if total + 1 in vals:
            return True
        raise KekulizationFailure(f"aromatic atom {i} cannot satisfy its valence")
    for v in vals:
        if v >= base:
            return v > base
    raise KekulizationFailure(f"aromatic atom {i} exceeds its valence")


def kekulize(g: MolGraph, aromatic_bonds=None) -> MolGraph:
    """Assign single/double orders to aromatic bonds and clear aromatic flags.

    ``aromatic_bonds`` defaults to every single ring bond joining two aromatic
    atoms. The atoms that need a double bond must be perfectly matched along
    aromatic bonds; otherwise KekulizationFailure is raised.
    """
    if not any(a.aromatic for a in g.atoms):
        return g
    if aromatic_bonds is None:
        ring = {b.pair for b in g.bonds} - bridges(g)
        aromatic_bonds = {
            b.pair for b in g.bonds if b.order == 1 and b.pair in ring and g.atoms[b.i].aromatic and g.atoms[b.j].aromatic
        }
    aromatic_bonds = {(min(a, b), max(a, b)) for a, b in aromatic_bonds}
    count = [0] * len(g.atoms)
    for a, b in aromatic_bonds:
        count[a] += 1
        count[b] += 1
    need = [g.atoms[i].aromatic and _needs_double(g, i, count[i]) for i in range(len(g.atoms))]
    partners: dict[int, list[int]] = {i: [] for i in range(len(g.atoms)) if need[i]}
    for a, b in sorted(aromatic_bonds):
        if need[a] and need[b]:
            partners[a].append(b)
            partners[b].append(a)
    matching = _perfect_matching(partners)
    if matching is None:
        raise KekulizationFailure("no Kekule structure exists for the aromatic system")
    doubles = {(min(a, b), max(a, b)) for a, b in matching.items()}
    bonds = tuple(Bond(b.i, b.j, 2 if b.pair in doubles else b.order) for b in g.bonds)
    atoms = tuple(Atom(a.element, a.formal_charge, a.explicit_h) for a in g.atoms)
    return MolGraph(atoms, bonds)


def _perfect_matching(partners: dict[int, list[int]]) -> dict[int, int] | None:
    """Backtracking perfect matching; always expands the most constrained vertex."""
    match: dict[int, int] = {}
    free = set(partners)

    def solve() -> bool:
        if not free:
            return True
        best, options = None, None
        for v in sorted(free):
            opts = [w for w in partners[v] if w in free]
            if options is None or len(opts) < len(options):
                best, options = v, opts
                if not opts:
                    return False
        for w in options:
            free.discard(best)
            free.discard(w)
            match[best], match[w] = w, best
            if solve():
                return True
            del match[best], match[w]
            free.add(best)
            free.add(w)
        return False

    return dict(match) if solve() else None


# --- writer ----------------------------------------------------------------


def _atom_symbol(g: MolGraph, v: int) -> str:
    atom = g.atoms[v]
    h = g.hydrogens[v]
    if atom.formal_charge == 0 and atom.element in ORGANIC and default_hydrogens(atom.element, 0, g.bond_sum(v)) == h:
        return atom.element
    out = "[" + atom.element
    if h:
        out += "H" if h == 1 else f"H{h}"
    q = atom.formal_charge
    if q:
        out += ("+" if q > 0 else "-") + (str(abs(q)) if abs(q) > 1 else "")
    return out + "]"


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d:02d}"


def write_ordered(g: MolGraph, position: Sequence[int]) -> str:
    """Depth-first SMILES starting at the atom with the lowest ``position``,
    visiting neighbors in ascending ``position``."""
    if not check_valence(g):
        raise InvalidMolecule("cannot write a molecule that fails the valence check")
    n = len(g.atoms)
    nbrs = [sorted((w for w, _ in g.adjacency[v]), key=lambda w: position[w]) for v in range(n)]
    roots = sorted(range(n), key=lambda v: position[v])
    visited = [False] * n
    children: list[list[int]] = [[] for _ in range(n)]
    ring_at: list[list[int]] = [[] for _ in range(n)]
    seen_edges = set()

    def walk(v: int, parent: int) -> None:
        visited[v] = True
        for w in nbrs[v]:
            e = (min(v, w), max(v, w))
            if w == parent or e in seen_edges:
                continue
            seen_edges.add(e)
            if visited[w]:
                ring_at[w].append(v)
                ring_at[v].append(w)
            else:
                children[v].append(w)
                walk(w, v)

    parts: list[str] = []
    open_rings: dict[tuple[int, int], int] = {}
    free_digits: list[int] = []
    next_digit = [1]

    def emit(v: int, parent: int) -> None:
        parts.append(_atom_symbol(g, v))
        released = []
        for w in ring_at[v]:
            e = (min(v, w), max(v, w))
            if e in open_rings:
                d = open_rings.pop(e)
                parts.append(_ring_label(d))
                released.append(d)
            else:
                if free_digits:
                    d = min(free_digits)
                    free_digits.remove(d)
                else:
                    d = next_digit[0]
                    next_digit[0] += 1
                open_rings[e] = d
                parts.append(_ORDER_SYMBOL[g.bond_order(v, w)] + _ring_label(d))
        free_digits.extend(released)
        kids = children[v]
        for k, w in enumerate(kids):
            sym = _ORDER_SYMBOL[g.bond_order(v, w)]
            if k < len(kids) - 1:
                parts.append("(" + sym)
                emit(w, v)
                parts.append(")")
            else:
                parts.append(sym)
                emit(w, v)

    pieces = []
    for r in roots:
        if visited[r]:
            continue
        walk(r, -1)
        parts = []
        emit(r, -1)
        pieces.append("".join(parts))
    return ".".join(pieces)


def write(g: MolGraph) -> str:
    """Kekulized SMILES in atom-index order (root = atom 0)."""
    return write_ordered(g, range(len(g.atoms)))


def try_parse(text: str):
    """Parse, returning (graph, None) or (None, error)."""
    try:
        return parse(text), None
    except (InvalidMolecule, SmilesSyntaxError, UnsupportedFeature, ValenceViolation) as exc:
        return None, exc
