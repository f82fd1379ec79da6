"""Graph-based genetic algorithm for molecule optimization and generation."""

from .engine import GAConfig, RunResult, run
from .errors import MolError
from .fingerprint import morgan_fingerprint, tanimoto
from .genops import OperatorConfig, crossover, mutate, reproduce
from .metrics import auc_top10, generation_metrics
from .molgraph import Atom, Bond, MolGraph, canonical_form, canonical_smiles, is_isomorphic
from .oracles import build_oracle, isomer_oracle, rediscovery_oracle, similarity_oracle
from .sampler import sample_batch
from .smiles import parse, write

__all__ = [
    "Atom",
    "Bond",
    "GAConfig",
    "MolError",
    "MolGraph",
    "OperatorConfig",
    "RunResult",
    "auc_top10",
    "build_oracle",
    "canonical_form",
    "canonical_smiles",
    "crossover",
    "generation_metrics",
    "is_isomorphic",
    "isomer_oracle",
    "morgan_fingerprint",
    "mutate",
    "parse",
    "rediscovery_oracle",
    "reproduce",
    "run",
    "sample_batch",
    "similarity_oracle",
    "tanimoto",
    "write",
]

__version__ = "0.1.0"
