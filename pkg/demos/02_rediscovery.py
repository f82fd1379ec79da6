"""Rediscover paracetamol from a cloud of nearby molecules.

The oracle is Tanimoto similarity to the target, so a score of 1.0 means
the GA found the target itself. Run with ``python demos/02_rediscovery.py``.
"""

import time

from molga import GAConfig, parse, rediscovery_oracle, run
from molga.benchmark import rediscovery_start

target = parse("CC(=O)Nc1ccc(O)cc1")
oracle = rediscovery_oracle(target)

# 100 distinct molecules, each three random edits away from the target.
start = rediscovery_start(target, seed=0)
print("best starting score:", round(max(oracle(g) for g in start), 3))

config = GAConfig(population_size=100, offspring_size=5, budget=2000, rng_seed=0)
t0 = time.perf_counter()
result = run(config, oracle, start)
print(f"finished in {time.perf_counter() - t0:.1f}s after {result.steps} steps ({result.stop_reason})")

# Where the best score first improved.
best = -1.0
for rec in result.history:
    if rec.score > best:
        best = rec.score
        print(f"  eval {rec.eval_index:5d}  {rec.score:.3f}  {rec.canonical:<28} via {rec.operator}")

auc = result.auc()
print(f"\nAUC top-10 {auc.auc_top10:.3f}, final top-10 mean {auc.final_top10_mean:.3f}")
print("operator use:", result.operator_stats)
