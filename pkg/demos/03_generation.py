"""Unconditional generation from a reference set, and what the sampler does.

Compares one round of GA breeding against the AddCarbon baseline on the
bundled reference molecules. Run with ``python demos/03_generation.py``.
"""

import numpy as np

from molga.benchmark import addcarbon_baseline, bundled_reference, generate_from_population, unscored_ranking
from molga.metrics import format_generation_row, generation_metrics
from molga.molgraph import canonical_form
from molga.sampler import rank_probabilities

ref = bundled_reference()
print(f"reference: {len(ref.molecules)} molecules, {len(ref.rejections)} rejected lines")
known = {canonical_form(g).string for g in ref.molecules}
ranked = unscored_ranking(ref.molecules)

# Quantile sampling puts most of its mass on the top of the ranking.
p = rank_probabilities(len(ranked))
for top in (1, 10, 100, 1000):
    print(f"  P(parent within top {top:4d}) = {p[:top].sum():.3f}")

n = 2000
for min_exponent in (-3.0, -1.0):
    gen = generate_from_population(ranked, n, np.random.default_rng(0), min_exponent=min_exponent)
    print(format_generation_row(f"GA u>={min_exponent:g}", generation_metrics(gen, known)))
print(format_generation_row("AddCarbon", generation_metrics(addcarbon_baseline(ref.molecules, n, np.random.default_rng(0)), known)))
