"""Plugging in an oracle that lives in another process.

Any program that reads one SMILES per line on stdin and answers with one
number per line can score molecules. Here the "external" scorer is a tiny
Python script that prefers molecules with exactly twelve carbons.
Run with ``python demos/04_external_oracle.py``.
"""

import sys
import tempfile
from pathlib import Path

from molga import GAConfig, run
from molga.benchmark import bundled_reference
from molga.oracles import SubprocessOracle

SCORER = """
import math, re, sys
for line in sys.stdin:
    carbons = len(re.findall(r"C(?!l)|c", line))
    print(math.exp(-abs(carbons - 12) / 3), flush=True)
"""

with tempfile.TemporaryDirectory() as tmp:
    script = Path(tmp) / "scorer.py"
    script.write_text(SCORER)
    with SubprocessOracle([sys.executable, str(script)], timeout=10.0) as oracle:
        result = run(GAConfig(population_size=50, budget=500, rng_seed=1), oracle, bundled_reference().molecules)

print(f"{len(result.history)} evaluations, best {result.population[0].score:.3f}")
for m in result.population[:5]:
    print(f"  {m.score:.3f}  {m.canonical}")
