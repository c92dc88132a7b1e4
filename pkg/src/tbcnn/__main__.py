"""Command-line entry point."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import TbcnnError, format_error_response
from .harness.artifacts import ArtifactStore
from .harness.pipeline import Experiment, run_experiment, run_region_sweep
from .harness.report import emit_report, format_table
from .models import MetricsReport
from .validation import SYSTEMS, normalize_system

logger = logging.getLogger("tbcnn")

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbcnn",
        description="Topic-based CNN text classification and its comparison baselines.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="YAML experiment file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value, e.g. --set lda.k=16 (repeatable)",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("prepare", help="tokenize, build the vocabulary and encode")
    lda = commands.add_parser("lda", help="fit the topic model")
    lda.add_argument("--sweep", action="store_true", help="sweep lda.k_values and keep the best")
    train = commands.add_parser("train", help="train one system")
    train.add_argument("--system", required=True, type=normalize_system, help="/".join(SYSTEMS))
    evaluate = commands.add_parser("evaluate", help="score trained systems on the test split")
    evaluate.add_argument("--system", type=normalize_system, help="default: every trained system")
    commands.add_parser("report", help="write report.txt and report.tsv from stored metrics")
    commands.add_parser("run-all", help="run the whole pipeline")
    sweep = commands.add_parser("region-sweep", help="train one CNN per region-size set")
    sweep.add_argument(
        "--system", default="tbcnn", type=normalize_system, help="textcnn or tbcnn (default)"
    )
    sweep.add_argument(
        "--regions",
        action="append",
        type=parse_region_sizes,
        metavar="H1,H2,...",
        help="region sizes to try, e.g. --regions 2,3,4 (repeatable; default cnn.region_sweep)",
    )
    return parser


def parse_region_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"region sizes must be integers, got '{text}'") from None
    if not sizes:
        raise argparse.ArgumentTypeError("at least one region size is required")
    return sizes


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt=DATE_FORMAT, force=True)
    # numba logs its compilation passes at DEBUG
    logging.getLogger("numba").setLevel(logging.WARNING)


def _trained_systems(config: ExperimentConfig, store: ArtifactStore) -> list[str]:
    return [system for system in config.systems if store.model(system).exists()]


def _stored_report(config: ExperimentConfig, store: ArtifactStore) -> MetricsReport:
    report = MetricsReport(seed=config.seed)
    for system in config.systems:
        if store.metrics(system).exists():
            report.results.append(store.read_result(system))
    return report


def run_command(args: argparse.Namespace, config: ExperimentConfig) -> int:
    store = ArtifactStore(config.output_dir).ensure()
    command = args.command

    if command == "run-all":
        report = run_experiment(config, store)
        print(format_table(report), end="")
        return 0

    if command == "region-sweep":
        report = run_region_sweep(config, store, args.system)
        print(format_table(report), end="")
        return 0

    if command == "report":
        report = _stored_report(config, store)
        if not report.results:
            print(f"error: no metrics in {store.root}; run 'evaluate' first", file=sys.stderr)
            return 1
        emit_report(report, store.root)
        print(format_table(report), end="")
        return 0

    if command == "prepare":
        data = Experiment(config, store).data
        print(
            f"vocabulary: {data.vocab.size} entries; train {len(data.train)} / "
            f"test {len(data.test)} documents -> {store.root}"
        )
        return 0

    if command == "lda":
        if args.sweep:
            config = config.model_copy(update={"lda": config.lda.model_copy(update={"k": None})})
        experiment = Experiment(config, store)
        table = experiment.topic_table
        print(f"fitted k={table.k} topics -> {store.lda_model}")
        return 0

    experiment = Experiment(config, store, reuse_lda=True)
    if command == "train":
        trained = experiment.train_system(args.system)
        path = store.model(trained.system)
        print(f"{trained.system}: trained in {trained.fit_seconds:.1f}s -> {path}")
        return 0

    systems = [args.system] if args.system else _trained_systems(config, store)
    if not systems:
        print(f"error: no trained systems in {store.root}; run 'train' first", file=sys.stderr)
        return 1
    for system in systems:
        result = experiment.evaluate(experiment.load_trained(system))
        print(f"{system}: accuracy {result.metrics.accuracy:.2f}, F1 {result.metrics.f1:.2f}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the command line."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    overrides = list(args.overrides)
    if args.command == "region-sweep" and args.regions:
        overrides.append(f"cnn.region_sweep={[list(sizes) for sizes in args.regions]}")
    try:
        config = load_config(args.config, overrides, seed=args.seed, output_dir=args.out)
        if args.command != "report":
            config.validate_paths()
    except (ValueError, PydanticValidationError, TbcnnError) as e:
        response = format_error_response(e)
        print(f"Configuration error: {response['error']}", file=sys.stderr)
        return 2

    try:
        return run_command(args, config)
    except TbcnnError as e:
        logger.debug("details: %s", e.details)
        print(f"error: {e.message}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"Unexpected error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
