"""Objective functions scoring a molecule into [0, 1]."""

from __future__ import annotations

import math
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import OracleError
from .fingerprint import DEFAULT_RADIUS, morgan_fingerprint, tanimoto
from .molgraph import MolGraph, canonical_smiles, formula_string, molecular_formula, parse_formula, ring_count

ISOMER_TEMPERATURE = 2.0


@dataclass(frozen=True)
class Oracle:
    name: str
    fn: Callable[[MolGraph], float] = field(repr=False, compare=False)
    target: object = None

    def __call__(self, g: MolGraph) -> float:
        return float(self.fn(g))


def similarity_oracle(target: MolGraph, radius: int = DEFAULT_RADIUS, name: str | None = None) -> Oracle:
    target_fp = morgan_fingerprint(target, radius)
    return Oracle(
        name or f"similarity:{canonical_smiles(target)}",
        lambda g: tanimoto(morgan_fingerprint(g, radius), target_fp),
        target,
    )


def rediscovery_oracle(target: MolGraph, name: str | None = None) -> Oracle:
    """Same score as similarity; reaching 1.0 means the target was found."""
    return similarity_oracle(target, name=name or f"rediscovery:{canonical_smiles(target)}")


def isomer_oracle(formula: dict[str, int] | str, temperature: float = ISOMER_TEMPERATURE) -> Oracle:
    if isinstance(formula, str):
        formula = parse_formula(formula)
    if not formula or any(v < 0 for v in formula.values()):
        raise ValueError("formula must be a nonempty map of nonnegative counts")
    target = dict(formula)

    def score(g: MolGraph) -> float:
        got = molecular_formula(g)
        dev = sum(abs(got.get(e, 0) - target.get(e, 0)) for e in set(got) | set(target))
        return math.exp(-dev / temperature)

    return Oracle(f"isomer:{formula_string(target)}", score, target)


def target_count_oracle(name: str, measure: Callable[[MolGraph], int], target: int, temperature: float = 2.0) -> Oracle:
    """exp(-|measure(g) - target| / temperature); a smooth structural component for MPO tasks."""
    return Oracle(f"{name}:{target}", lambda g: math.exp(-abs(measure(g) - target) / temperature), target)


def heavy_atom_oracle(target: int, temperature: float = 2.0) -> Oracle:
    return target_count_oracle("heavy_atoms", lambda g: len(g.atoms), target, temperature)


def ring_count_oracle(target: int, temperature: float = 1.0) -> Oracle:
    return target_count_oracle("rings", ring_count, target, temperature)


def geometric_mpo(components: Sequence[tuple[Oracle, float]], name: str = "mpo") -> Oracle:
    """Weighted geometric mean of component scores (0 if any component is 0)."""
    components = list(components)
    if not components:
        raise ValueError("geometric_mpo needs at least one component")
    if any(w <= 0 for _, w in components):
        raise ValueError("component weights must be positive")
    total = sum(w for _, w in components)

    def score(g: MolGraph) -> float:
        log_sum = 0.0
        for oracle, w in components:
            s = oracle(g)
            if s <= 0.0:
                return 0.0
            log_sum += w * math.log(s)
        return math.exp(log_sum / total)

    return Oracle(name, score, tuple((o.name, w) for o, w in components))


def constant_oracle(value: float = 0.0) -> Oracle:
    return Oracle(f"constant:{value:g}", lambda g: value, value)


class SubprocessOracle:
    """Scores molecules with an external program over a line protocol.

    One canonical SMILES per line goes to the child's stdin; one decimal score
    per line comes back on stdout. Timeouts, early exit and non-numeric replies
    raise OracleError.
    """

    def __init__(self, command: str | Sequence[str], timeout: float = 60.0, name: str | None = None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.name = name or "external:" + " ".join(self.command)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise OracleError(f"cannot start oracle {self.command!r}: {exc}") from exc
        return self._proc

    def __call__(self, g: MolGraph) -> float:
        return self.score_smiles(canonical_smiles(g))

    def score_smiles(self, smiles: str) -> float:
        with self._lock:
            proc = self._ensure_started()
            try:
                proc.stdin.write(smiles + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise OracleError(f"oracle process closed its input: {exc}") from exc
            reply: list[str] = []
            reader = threading.Thread(target=lambda: reply.append(proc.stdout.readline()), daemon=True)
            reader.start()
            reader.join(self.timeout)
            if reader.is_alive():
                self.close()
                raise OracleError(f"oracle timed out after {self.timeout}s on {smiles!r}")
            line = reply[0] if reply else ""
            if not line:
                raise OracleError(f"oracle exited without replying to {smiles!r}")
            try:
                value = float(line.strip())
            except ValueError:
                raise OracleError(f"non-numeric oracle reply {line.strip()!r}") from None
            if not math.isfinite(value):
                raise OracleError(f"non-finite oracle reply {line.strip()!r}")
            return value

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc.wait()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def build_oracle(spec: str, timeout: float = 60.0):
    """Build an oracle from a ``kind:argument`` string.

    Kinds: ``similarity:<smiles>``, ``rediscovery:<smiles>``,
    ``isomer:<formula>``, ``constant:<value>``, ``heavy_atoms:<n>``,
    ``rings:<n>`` and ``external:<command>``.
    """
    from .smiles import parse

    kind, _, arg = spec.partition(":")
    if not arg:
        raise ValueError(f"oracle spec {spec!r} must look like kind:argument")
    if kind == "similarity":
        return similarity_oracle(parse(arg))
    if kind == "rediscovery":
        return rediscovery_oracle(parse(arg))
    if kind == "isomer":
        return isomer_oracle(arg)
    if kind == "constant":
        return constant_oracle(float(arg))
    if kind == "heavy_atoms":
        return heavy_atom_oracle(int(arg))
    if kind == "rings":
        return ring_count_oracle(int(arg))
    if kind == "external":
        return SubprocessOracle(arg, timeout=timeout)
    raise ValueError(f"unknown oracle kind {kind!r}")
