"""Command-line benchmark harness.

    molga-bench --mode optimize --oracle rediscovery:CCO --budget 2000 --out runs/x
    molga-bench --mode generate --reference bundled --n 10000 --out runs/gen
    molga-bench --mode addcarbon-baseline --n 10000 --out runs/ac
    molga-bench --config run.ini

Run configs are INI files (sections ``run``, ``ga``, ``sampler``,
``operators``, ``operators.weights``, ``oracle``, ``init``); command-line flags
override them. Exit codes: 0 ok, 2 config error, 3 reference failure,
4 oracle failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import sampler
from .benchmark import (
    IngestResult,
    addcarbon_baseline,
    bundled_path,
    generate_from_population,
    ingest_reference,
    rediscovery_start,
    unscored_ranking,
)
from .engine import GAConfig, run, threads_from_env
from .errors import EmptyReference, MolError, OracleError
from .genops import DEFAULT_MUTATION_WEIGHTS, OperatorConfig
from .metrics import format_generation_row, generation_metrics
from .molgraph import canonical_form
from .oracles import build_oracle
from .smiles import parse

log = logging.getLogger("molga")

MODES = ("optimize", "generate", "addcarbon-baseline")
EXIT_OK, EXIT_CONFIG, EXIT_REFERENCE, EXIT_ORACLE = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class ReferenceError_(Exception):
    pass


@dataclass
class RunManifest:
    mode: str
    config_path: str | None
    reference: str
    oracle: str | None
    out: str
    seed: int
    n: int
    ga: GAConfig
    init_source: str = "reference"
    variant_target: str | None = None
    variant_edits: int = 3
    variant_count: int = 100
    oracle_timeout: float = 60.0

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "optimize" and not self.oracle:
            raise ConfigError("optimize mode needs an oracle (--oracle or [oracle] spec)")
        if self.mode != "optimize" and not self.reference:
            raise ConfigError(f"{self.mode} mode needs a reference set")
        if self.init_source not in ("reference", "variants"):
            raise ConfigError("init source must be 'reference' or 'variants'")
        if self.init_source == "variants" and not self.variant_target:
            raise ConfigError("init source 'variants' needs a variant target")
        if self.n < 0:
            raise ConfigError("--n must be >= 0")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "config_path": self.config_path,
            "reference": self.reference,
            "oracle": self.oracle,
            "out": self.out,
            "seed": self.seed,
            "n": self.n,
            "init": {
                "source": self.init_source,
                "variant_target": self.variant_target,
                "variant_edits": self.variant_edits,
                "variant_count": self.variant_count,
            },
            "oracle_timeout": self.oracle_timeout,
            "ga": self.ga.to_dict(),
        }


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="molga-bench", description="Budgeted molecular GA benchmarks.")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--reference", help="SMILES file, one per line, or 'bundled'")
    p.add_argument("--oracle", help="oracle spec, e.g. rediscovery:<smiles>, isomer:C7H8N2O2, external:<cmd>")
    p.add_argument("--budget", type=int)
    p.add_argument("--offspring-size", type=int)
    p.add_argument("--population-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="molecules to generate (generate / addcarbon-baseline)")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _getbool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def load_manifest(args: argparse.Namespace) -> RunManifest:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc

    def get(section, key, default=None):
        return cp.get(section, key, fallback=default) if cp.has_section(section) else default

    try:
        weights = dict(DEFAULT_MUTATION_WEIGHTS)
        if cp.has_section("operators.weights"):
            weights.update({k: float(v) for k, v in cp.items("operators.weights")})
        ops = OperatorConfig(
            mutation_weights=weights,
            crossover_prob=float(get("operators", "crossover_prob", 0.5)),
            mutate_after_crossover=float(get("operators", "mutate_after_crossover", 0.5)),
            insert_elements=tuple(str(get("operators", "insert_elements", "C")).split()),
            substitution_elements=tuple(str(get("operators", "substitution_elements", "C N O S F Cl Br")).split()),
            max_retries=int(get("operators", "max_retries", 20)),
            size_cap=int(get("operators", "size_cap", 120)),
        )
        seed = args.seed if args.seed is not None else int(get("run", "seed", get("ga", "seed", 0)))
        ga = GAConfig(
            population_size=args.population_size or int(get("ga", "population_size", 100)),
            offspring_size=args.offspring_size or int(get("ga", "offspring_size", 5)),
            budget=args.budget or int(get("ga", "budget", 10_000)),
            rng_seed=seed,
            operators=ops,
            sampler_mode=str(get("sampler", "mode", "quasi_grid")),
            min_exponent=float(get("sampler", "min_exponent", sampler.DEFAULT_MIN_EXPONENT)),
            count_initial=_getbool(str(get("ga", "count_initial", "true"))),
            max_stall_steps=int(get("ga", "max_stall_steps", 1000)),
            threads=threads_from_env(int(get("ga", "threads", 1))),
        )
        manifest = RunManifest(
            mode=args.mode or get("run", "mode", "optimize"),
            config_path=args.config,
            reference=args.reference or get("run", "reference", "bundled"),
            oracle=args.oracle or get("oracle", "spec"),
            out=args.out or get("run", "out", "molga-out"),
            seed=seed,
            n=args.n if args.n is not None else int(get("run", "n", 10_000)),
            ga=ga,
            init_source=str(get("init", "source", "reference")),
            variant_target=get("init", "variant_target"),
            variant_edits=int(get("init", "variant_edits", 3)),
            variant_count=int(get("init", "variant_count", 100)),
            oracle_timeout=float(get("oracle", "timeout", 60.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    manifest.validate()
    return manifest


def load_reference(manifest: RunManifest) -> IngestResult:
    path = bundled_path("reference.smi") if manifest.reference == "bundled" else Path(manifest.reference)
    try:
        result = ingest_reference(path)
    except OSError as exc:
        raise ReferenceError_(f"cannot read reference {path}: {exc}") from exc
    for rej in result.rejections:
        log.info("reference line %d rejected (%s): %s", rej.line_number, rej.kind, rej.message)
    if not result.molecules:
        raise ReferenceError_(f"no usable molecule in {path}")
    return result


def _write_outputs(out: Path, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_optimize(manifest: RunManifest, stdout=None):
    oracle = build_oracle(manifest.oracle, timeout=manifest.oracle_timeout)
    try:
        if manifest.init_source == "variants":
            start = rediscovery_start(
                parse(manifest.variant_target),
                manifest.seed,
                manifest.variant_count,
                manifest.variant_edits,
                manifest.ga.operators,
            )
        else:
            start = load_reference(manifest).molecules
        result = run(manifest.ga, oracle, start)
    finally:
        if hasattr(oracle, "close"):
            oracle.close()
    summary = result.summary()
    _write_outputs(
        Path(manifest.out),
        {
            "history.jsonl": result.to_jsonl(),
            "summary.csv": _csv([{k: v for k, v in summary.items() if k != "operator_stats"}]),
            "manifest.json": json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
        },
    )
    print(f"auc_top10 {summary['auc_top10']:.6f}", file=stdout)
    print(f"final_top10_mean {summary['final_top10_mean']:.6f}", file=stdout)
    print(f"best {summary['best_score']:.6f} {summary['best_canonical']}", file=stdout)
    return result


def cmd_generate(manifest: RunManifest, stdout=None):
    ref = load_reference(manifest)
    reference_forms = {canonical_form(g).string for g in ref.molecules}
    rng = np.random.default_rng(manifest.seed)
    if manifest.mode == "addcarbon-baseline":
        generated = addcarbon_baseline(ref.molecules, manifest.n, rng)
        label = "AddCarbon"
    else:
        ranked = unscored_ranking(ref.molecules)
        generated = generate_from_population(
            ranked, manifest.n, rng, manifest.ga.operators, manifest.ga.sampler_mode, manifest.ga.min_exponent
        )
        label = "molga"
    report = generation_metrics(generated, reference_forms)
    smiles = [canonical_form(g).string for g in generated]
    row = report.to_dict()
    _write_outputs(
        Path(manifest.out),
        {
            "generated.smi": "".join(s + "\n" for s in smiles),
            "report.json": json.dumps({**row, "reference_rejections": len(ref.rejections)}, indent=2, sort_keys=True) + "\n",
            "summary.csv": _csv([{"method": label, **row}]),
            "manifest.json": json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
        },
    )
    print(format_generation_row(label, report), file=stdout)
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        manifest = load_manifest(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if manifest.mode == "optimize":
            cmd_optimize(manifest)
        else:
            cmd_generate(manifest)
    except (ReferenceError_, EmptyReference) as exc:
        print(f"reference error: {exc}", file=sys.stderr)
        return EXIT_REFERENCE
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (ValueError, MolError) as exc:
        # Bad oracle specs and variant targets surface here.
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
