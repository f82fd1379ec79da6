"""Molecules as graphs: parsing, identity and similarity.

Run with ``python demos/01_molecules.py``.
"""

from molga import canonical_smiles, is_isomorphic, morgan_fingerprint, parse, tanimoto, write
from molga.molgraph import check_valence, molecular_formula

# Aromatic input is kekulized on the way in, so the graph only has
# single/double bonds and plain valence rules apply.
paracetamol = parse("CC(=O)Nc1ccc(O)cc1")
print("atoms:", len(paracetamol.atoms), "bonds:", len(paracetamol.bonds))
print("formula:", molecular_formula(paracetamol))
print("valid:", check_valence(paracetamol))
print("written back:", write(paracetamol))

# Two spellings of the same molecule share one canonical string.
a, b = parse("OCC"), parse("C(O)C")
print("\nOCC vs C(O)C canonical:", canonical_smiles(a), canonical_smiles(b), "isomorphic:", is_isomorphic(a, b))

# Without aromaticity perception the two Kekule drawings of o-xylene differ.
x1, x2 = parse("CC1=CC=CC=C1C"), parse("CC1=C(C)C=CC=C1")
print("o-xylene Kekule forms identical?", canonical_smiles(x1) == canonical_smiles(x2))

# Circular fingerprints and Tanimoto similarity drive the rediscovery oracle.
fp = morgan_fingerprint(paracetamol)
print("\nparacetamol fingerprint size:", len(fp))
for smi in ["CC(=O)Nc1ccc(O)cc1", "CC(=O)Nc1ccccc1", "Oc1ccccc1", "CCO"]:
    print(f"  tanimoto to {smi:<22} {tanimoto(fp, morgan_fingerprint(parse(smi))):.3f}")
