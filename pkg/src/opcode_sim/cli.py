"""Command-line interface for opcode-sim."""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from opcode_sim.asm.parser import LISTING_SUFFIX, load_program, serialize_program
from opcode_sim.classify.threshold import ClassifierConfig, calibrate_threshold, classify
from opcode_sim.errors import OpcodeSimError, UsageError
from opcode_sim.features.distance import MetricSpec, distance_matrix, min_match
from opcode_sim.features.histogram import extract_features
from opcode_sim.io.config_loader import load_analysis_config, load_labels, load_weights
from opcode_sim.io.corpus_loader import collect_corpus, load_features
from opcode_sim.io.histogram_cache import cache_path_for, file_digest, render_histogram_cache
from opcode_sim.io.results import (
    dump_json,
    format_calibration,
    format_classification,
    format_match_report,
    format_matrix_table,
    load_matrix,
    matrix_to_csv,
    matrix_to_json,
    write_files_atomic,
    write_text_atomic,
)
from opcode_sim.mutation.engine import MutationConfig, Technique, make_family, mutate
from opcode_sim.mutation.rules import Rulebook, load_rulebook

logger = logging.getLogger(__name__)

COMMANDS = ("parse", "features", "compare", "matrix", "classify", "mutate", "family", "calibrate")
FORMATS = ("csv", "json", "text")


@dataclass
class RunConfig:
    """Validated settings for one CLI invocation."""

    command: str
    inputs: list[Path]
    metric: MetricSpec = field(default_factory=MetricSpec)
    threshold: Optional[float] = None
    seed: int = 0
    output: Optional[Path] = None
    output_format: str = "text"

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"Unknown command: {self.command}")
        if self.output_format not in FORMATS:
            raise UsageError(f"Unknown output format: {self.output_format}")
        if self.threshold is not None and self.threshold < 0:
            raise UsageError(f"Threshold must be >= 0, got {self.threshold}")


class _ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting, so main() owns the exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _require_files(paths: Sequence[Path]) -> None:
    for path in paths:
        if not path.is_file():
            raise UsageError(f"Input file not found: {path}")


def _parse_permutation(text: Optional[str]) -> Optional[dict[str, str]]:
    """`edx=eax,edi=ebx` -> {"edx": "eax", "edi": "ebx"}."""
    if text is None:
        return None
    mapping = {}
    for item in text.split(","):
        source, sep, target = item.partition("=")
        if not sep or not source.strip() or not target.strip():
            raise UsageError(f"Bad permutation entry {item!r} (expected reg=reg)")
        mapping[source.strip().lower()] = target.strip().lower()
    return mapping


def _resolve_metric(args: argparse.Namespace) -> tuple[MetricSpec, float]:
    """Metric and threshold: explicit flag, then --config, then defaults."""
    config = load_analysis_config(Path(args.config) if args.config else None)
    metric = config.metric
    threshold = config.threshold

    r = args.exponent if args.exponent is not None else metric.r
    root = args.root if args.root is not None else metric.root
    weights = load_weights(Path(args.weights)) if args.weights else metric.weights
    if getattr(args, "threshold", None) is not None:
        threshold = args.threshold
    try:
        return MetricSpec(r=r, root=root, weights=weights), threshold
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_rulebook(args: argparse.Namespace) -> Optional[Rulebook]:
    if not getattr(args, "rulebook", None):
        return None
    path = Path(args.rulebook)
    _require_files([path])
    return load_rulebook(path)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Validate flags into a RunConfig before anything is read or written."""
    if args.command is None:
        raise UsageError("No command given")

    inputs = [Path(p) for p in getattr(args, "inputs", [])]
    metric = MetricSpec()
    threshold = None
    if hasattr(args, "exponent"):
        metric, threshold = _resolve_metric(args)

    output = getattr(args, "output", None)
    return RunConfig(
        command=args.command,
        inputs=inputs,
        metric=metric,
        threshold=threshold,
        seed=getattr(args, "seed", 0),
        output=Path(output) if output else None,
        output_format=getattr(args, "format", "text"),
    )


def _mutation_config(args: argparse.Namespace, technique: str, rulebook: Optional[Rulebook]) -> MutationConfig:
    try:
        return MutationConfig(
            technique=Technique(technique),
            seed=args.seed,
            density=args.density,
            rulebook=rulebook,
            permutation=_parse_permutation(getattr(args, "permutation", None)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        print(text, end="" if text.endswith("\n") else "\n")
    else:
        write_text_atomic(output, text if text.endswith("\n") else text + "\n")
        print(f"Saved to: {output}")


def cmd_parse(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Validate listings and print a summary."""
    _require_files(cfg.inputs)
    programs = [load_program(path) for path in cfg.inputs]

    if cfg.output_format == "json":
        records = [
            {
                "id": program.id,
                "subroutines": [
                    {"name": sub.name, "instructions": len(sub.body), "labels": len(sub.labels)}
                    for sub in program.subroutines
                ],
            }
            for program in programs
        ]
        _emit(dump_json(records), cfg.output)
        return 0

    for program in programs:
        print(f"\nProgram: {program.id}")
        print("=" * 50)
        print(f"{'Subroutine':<30} {'Instructions':>12} {'Labels':>6}")
        print("-" * 50)
        for sub in program.subroutines:
            print(f"{sub.name:<30} {len(sub.body):>12} {len(sub.labels):>6}")
        total = sum(len(sub.body) for sub in program.subroutines)
        print(f"\nSubroutines: {len(program.subroutines)}, instructions: {total}")
    return 0


def cmd_features(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Write `.hist.json` caches next to the listings (or into --output-dir)."""
    _require_files(cfg.inputs)
    out_dir = Path(args.output_dir) if args.output_dir else None
    files: dict[Path, str] = {}
    for path in cfg.inputs:
        if path.suffix.lower() != LISTING_SUFFIX:
            raise UsageError(f"Not a {LISTING_SUFFIX} listing: {path}")
        features = extract_features(load_program(path))
        files[cache_path_for(path, out_dir)] = render_histogram_cache(features, file_digest(path))

    for written in write_files_atomic(files):
        print(f"Wrote {written}")
    return 0


def cmd_compare(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Directed distances both ways and their average."""
    if len(cfg.inputs) != 2:
        raise UsageError("compare takes exactly two inputs")
    a, b = (load_features(path) for path in cfg.inputs)
    forward = min_match(a, b, cfg.metric)
    backward = min_match(b, a, cfg.metric)
    distance = (forward.average + backward.average) / 2

    if cfg.output_format == "json":
        record: dict = {
            "a": a.program_id,
            "b": b.program_id,
            "metric": cfg.metric.to_dict(),
            "directed": {"a_to_b": forward.average, "b_to_a": backward.average},
            "distance": distance,
        }
        if args.matches:
            record["matches"] = [
                [{"query": m.query, "target": m.target, "distance": m.distance} for m in report.matches]
                for report in (forward, backward)
            ]
        _emit(dump_json(record), cfg.output)
        return 0

    print(f"\nComparing {a.program_id} and {b.program_id}")
    print("=" * 50)
    print(f"d({a.program_id} -> {b.program_id}): {forward.average:.3f}")
    print(f"d({b.program_id} -> {a.program_id}): {backward.average:.3f}")
    print(f"Distance: {distance:.3f}")
    if args.matches:
        print(format_match_report(forward))
        print(format_match_report(backward))
    return 0


def cmd_matrix(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Pairwise matrix over a directory of listings and caches."""
    if len(cfg.inputs) != 1 or not cfg.inputs[0].is_dir():
        raise UsageError("matrix takes one directory")
    if args.workers < 1:
        raise UsageError(f"--workers must be >= 1, got {args.workers}")
    directory = cfg.inputs[0]
    csv_path = Path(args.csv) if args.csv else directory / "matrix.csv"
    json_path = Path(args.json) if args.json else directory / "matrix.json"

    corpus = collect_corpus(directory)
    matrix = distance_matrix(corpus, cfg.metric, workers=args.workers)
    write_files_atomic(
        {
            csv_path: matrix_to_csv(matrix),
            json_path: matrix_to_json(matrix, cfg.metric.to_dict()),
        }
    )

    print(format_matrix_table(matrix, args.threshold))
    print(f"\nMatrix saved to: {csv_path}, {json_path}")
    return 0


def cmd_classify(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Threshold classification of a saved matrix."""
    if len(cfg.inputs) != 1:
        raise UsageError("classify takes one matrix file")
    _require_files(cfg.inputs)
    matrix = load_matrix(cfg.inputs[0])
    try:
        classifier = ClassifierConfig(threshold=cfg.threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = classify(matrix, classifier)

    if cfg.output_format == "json":
        _emit(dump_json(result.to_dict()), cfg.output)
    else:
        text = format_matrix_table(matrix, classifier.threshold) + "\n" + format_classification(result)
        _emit(text, cfg.output)
    return 0


def cmd_calibrate(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Threshold calibration against known family labels."""
    if len(cfg.inputs) != 2:
        raise UsageError("calibrate takes a matrix file and a labels file")
    _require_files(cfg.inputs)
    matrix = load_matrix(cfg.inputs[0])
    labels = load_labels(cfg.inputs[1])
    calibration = calibrate_threshold(matrix, labels)

    if cfg.output_format == "json":
        _emit(dump_json(calibration.to_dict()), cfg.output)
    else:
        _emit(format_calibration(calibration), cfg.output)
    return 0


def cmd_mutate(args: argparse.Namespace, cfg: RunConfig) -> int:
    """One mutated variant of a listing."""
    if len(cfg.inputs) != 1:
        raise UsageError("mutate takes one listing")
    _require_files(cfg.inputs)
    source = cfg.inputs[0]
    rulebook = _load_rulebook(args)
    mutation = _mutation_config(args, args.technique, rulebook)
    output = cfg.output or source.with_name(f"{source.stem}_{mutation.technique.value}_{mutation.seed}{LISTING_SUFFIX}")

    variant = mutate(load_program(source), mutation)
    write_text_atomic(output, serialize_program(variant))
    print(f"Variant saved to: {output}")
    return 0


def cmd_family(args: argparse.Namespace, cfg: RunConfig) -> int:
    """A family of variants plus its lineage manifest."""
    if len(cfg.inputs) != 1:
        raise UsageError("family takes one listing")
    if args.count < 1:
        raise UsageError(f"--count must be >= 1, got {args.count}")
    _require_files(cfg.inputs)
    source = cfg.inputs[0]
    rulebook = _load_rulebook(args)
    steps = [_mutation_config(args, technique, rulebook) for technique in args.technique or ["regswap"]]
    out_dir = Path(args.output_dir) if args.output_dir else source.parent / f"{source.stem}_family"

    family = make_family(load_program(source), args.count, steps)
    files = {out_dir / f"{variant.id}{LISTING_SUFFIX}": serialize_program(variant) for variant in family.variants}
    files[out_dir / "manifest.json"] = dump_json(family.manifest)
    write_files_atomic(files)

    print(f"\nFamily of {family.base.id}")
    print("=" * 50)
    for record in family.manifest["variants"]:
        techniques = " + ".join(step["technique"] for step in record["steps"])
        print(f"{record['id']:<30} {techniques}")
    print(f"\nVariants saved to: {out_dir}")
    return 0


HANDLERS = {
    "parse": cmd_parse,
    "features": cmd_features,
    "compare": cmd_compare,
    "matrix": cmd_matrix,
    "classify": cmd_classify,
    "mutate": cmd_mutate,
    "family": cmd_family,
    "calibrate": cmd_calibrate,
}


def _add_metric_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--exponent", "-r",
        type=float,
        help="Minkowski exponent r >= 1 (default: 2)",
    )
    parser.add_argument(
        "--root",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Take the r-th root of the sum (default: off)",
    )
    parser.add_argument(
        "--weights",
        help="YAML file with per-mnemonic weights",
    )
    parser.add_argument(
        "--config",
        help="Analysis config YAML (metric and classifier defaults)",
    )


def _add_mutation_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Random seed (64-bit unsigned, default: 0)",
    )
    parser.add_argument(
        "--density",
        type=float,
        default=0.1,
        help="Per-site probability in [0, 1] (default: 0.1)",
    )
    parser.add_argument(
        "--rulebook",
        help="Substitution rulebook YAML (default: shipped rulebook)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="opcode-sim",
        description="Opcode histogram similarity of disassembled programs",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Debug logging on stderr",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands", parser_class=_ArgumentParser)

    # parse command
    parse_parser = subparsers.add_parser("parse", help="Validate listings and summarize them")
    parse_parser.add_argument("inputs", nargs="+", help="Listing files (.oasm)")
    parse_parser.add_argument("--format", choices=["text", "json"], default="text")
    parse_parser.add_argument("--output", "-o", help="Write the summary here instead of stdout")

    # features command
    features_parser = subparsers.add_parser("features", help="Write histogram caches")
    features_parser.add_argument("inputs", nargs="+", help="Listing files (.oasm)")
    features_parser.add_argument("--output-dir", help="Directory for .hist.json files (default: next to listing)")

    # compare command
    compare_parser = subparsers.add_parser("compare", help="Distance between two programs")
    compare_parser.add_argument("inputs", nargs=2, help="Two .oasm or .hist.json files")
    compare_parser.add_argument("--matches", action="store_true", help="Show per-subroutine pairings")
    compare_parser.add_argument("--format", choices=["text", "json"], default="text")
    compare_parser.add_argument("--output", "-o", help="Write JSON output here")
    _add_metric_arguments(compare_parser)

    # matrix command
    matrix_parser = subparsers.add_parser("matrix", help="Pairwise distance matrix of a directory")
    matrix_parser.add_argument("inputs", nargs=1, metavar="DIR", help="Directory of .oasm/.hist.json files")
    matrix_parser.add_argument("--csv", help="CSV output path (default: DIR/matrix.csv)")
    matrix_parser.add_argument("--json", help="JSON output path (default: DIR/matrix.json)")
    matrix_parser.add_argument("--workers", type=int, default=1, help="Threads for pair evaluation (default: 1)")
    matrix_parser.add_argument("--threshold", "-t", type=float, help="Flag cells at or below this value")
    _add_metric_arguments(matrix_parser)

    # classify command
    classify_parser = subparsers.add_parser("classify", help="Threshold classification of a matrix")
    classify_parser.add_argument("inputs", nargs=1, metavar="MATRIX", help="Matrix file (.json or .csv)")
    classify_parser.add_argument("--threshold", "-t", type=float, help="Classification threshold (default: 0.057)")
    classify_parser.add_argument("--config", help="Analysis config YAML")
    classify_parser.add_argument("--format", choices=["text", "json"], default="text")
    classify_parser.add_argument("--output", "-o", help="Write the result here instead of stdout")

    # mutate command
    mutate_parser = subparsers.add_parser("mutate", help="Generate one obfuscated variant")
    mutate_parser.add_argument("inputs", nargs=1, metavar="IN", help="Listing file (.oasm)")
    mutate_parser.add_argument(
        "--technique",
        required=True,
        choices=[t.value for t in Technique],
        help="Obfuscation technique",
    )
    mutate_parser.add_argument("--permutation", help="Register mapping for regswap, e.g. edx=eax,eax=edx")
    mutate_parser.add_argument("--output", "-o", help="Output listing path")
    _add_mutation_arguments(mutate_parser)

    # family command
    family_parser = subparsers.add_parser("family", help="Generate a variant family with a manifest")
    family_parser.add_argument("inputs", nargs=1, metavar="IN", help="Base listing file (.oasm)")
    family_parser.add_argument("--count", "-n", type=int, default=5, help="Number of variants (default: 5)")
    family_parser.add_argument(
        "--technique",
        action="append",
        choices=[t.value for t in Technique],
        help="Technique step, repeatable; steps compose in order (default: regswap)",
    )
    family_parser.add_argument("--output-dir", help="Output directory (default: <stem>_family next to IN)")
    _add_mutation_arguments(family_parser)

    # calibrate command
    calibrate_parser = subparsers.add_parser("calibrate", help="Calibrate a threshold from labeled families")
    calibrate_parser.add_argument("inputs", nargs=2, metavar=("MATRIX", "LABELS"), help="Matrix file and labels YAML")
    calibrate_parser.add_argument("--format", choices=["text", "json"], default="text")
    calibrate_parser.add_argument("--output", "-o", help="Write the report here instead of stdout")

    return parser


def _resolve_classify_threshold(args: argparse.Namespace, cfg: RunConfig) -> RunConfig:
    if args.command != "classify":
        return cfg
    config = load_analysis_config(Path(args.config) if args.config else None)
    cfg.threshold = args.threshold if args.threshold is not None else config.threshold
    if cfg.threshold < 0:
        raise UsageError(f"Threshold must be >= 0, got {cfg.threshold}")
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        if args.command is None:
            parser.print_help()
            return 0
        cfg = _resolve_classify_threshold(args, build_run_config(args))
        return HANDLERS[cfg.command](args, cfg)
    except OpcodeSimError as exc:
        print(json.dumps(exc.to_record()), file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 3}), file=sys.stderr)
        return 3
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 1}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
