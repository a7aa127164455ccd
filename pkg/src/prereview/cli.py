"""Command-line interface: composable pipeline verbs over a run directory.

Exit codes: 0 success, 1 usage/config error, 2 missing upstream artifact,
3 backend capability error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from .errors import (
    CapabilityError,
    ConfigError,
    EmptyCorpusError,
    MissingArtifactError,
    ParseError,
    PrereviewError,
)
from .ledgers import METHOD_BASELINE, METHOD_PREDICTED
from .pipeline import (
    RunConfig,
    RunDirectory,
    stage_classify,
    stage_evaluate,
    stage_ingest,
    stage_map,
    stage_report,
    stage_run_baseline,
    stage_run_predicted,
    stage_train_issue_model,
    stage_train_simulator,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_CAPABILITY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        # usage errors share exit code 1 with config errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the run config JSON file")
    common.add_argument(
        "--run-dir",
        default=None,
        help="run directory (default: runs/<app>-<config-hash>)",
    )
    common.add_argument("--seed", type=int, default=None, help="override the global seed")
    common.add_argument(
        "--stub", action="store_true", help="force deterministic stub backends for every slot"
    )
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = _Parser(prog="prereview", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="load corpus, build instances, align reviews")
    sub.add_parser("classify", parents=[common], help="train/apply the privacy classifiers")
    sub.add_parser("map", parents=[common], help="rank privacy reviews per feature, emit pairs")
    train = sub.add_parser("train", parents=[common], help="fine-tune a generation model")
    train.add_argument("stage", choices=["simulator", "issue-model"])
    run = sub.add_parser("run", parents=[common], help="produce per-instance issue ledgers")
    run.add_argument(
        "--method",
        choices=[METHOD_PREDICTED, METHOD_BASELINE, "both"],
        default="both",
    )
    sub.add_parser("evaluate", parents=[common], help="overlap and temporal-overlap metrics")
    sub.add_parser("report", parents=[common], help="write the Markdown run report")
    return parser


def _dispatch(args: argparse.Namespace, config: RunConfig, rundir: RunDirectory) -> None:
    if args.command == "ingest":
        stage_ingest(config, rundir)
    elif args.command == "classify":
        stage_classify(config, rundir)
    elif args.command == "map":
        stage_map(config, rundir)
    elif args.command == "train":
        if args.stage == "simulator":
            stage_train_simulator(config, rundir)
        else:
            stage_train_issue_model(config, rundir)
    elif args.command == "run":
        if args.method in (METHOD_BASELINE, "both"):
            stage_run_baseline(config, rundir)
        if args.method in (METHOD_PREDICTED, "both"):
            stage_run_predicted(config, rundir)
    elif args.command == "evaluate":
        stage_evaluate(config, rundir)
    elif args.command == "report":
        stage_report(config, rundir)
        print(rundir.root / "report.md")
    else:  # pragma: no cover - argparse enforces choices
        raise ConfigError(f"unknown command {args.command!r}")


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = RunConfig.from_file(args.config).with_overrides(
            seed=args.seed, force_stub=args.stub
        )
        config.check_paths()
        run_root = Path(args.run_dir) if args.run_dir else (
            Path("runs") / f"{config.app}-{config.config_hash[:8]}"
        )
        rundir = RunDirectory(run_root)
        with rundir.lock():
            _dispatch(args, config, rundir)
    except (ConfigError, ParseError, EmptyCorpusError) as exc:
        print(f"prereview: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        print(f"prereview: missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except CapabilityError as exc:
        print(f"prereview: backend capability: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except PrereviewError as exc:
        print(f"prereview: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
