from __future__ import annotations

import argparse
import sys
import traceback
from collections.abc import Sequence
from pathlib import Path

from app.config.pipeline_config import load_pipeline_config
from app.core.constants import STAGES
from app.core.errors import ConfigError, TweetSignalError
from app.logger import log_error, log_info
from app.services.app_bootstrap_service import start_application
from app.services.pipeline_context import PipelineContext
from app.services.pipeline_service import run_pipeline
from app.services.synthetic_corpus_service import SyntheticCorpusSpec, write_synthetic_corpus
from app.version import APP_NAME, APP_VERSION

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweet-signal",
        description="Predictive features from a tweet corpus: graphs, itemsets, series and models.",
    )
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("--config", type=Path, default=None, help="pipeline JSON config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a dotted config key; VALUE is parsed as JSON when possible",
    )
    parser.add_argument(
        "--log-level",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        type=str.upper,
        default=None,
    )

    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for stage in STAGES:
        commands.add_parser(stage, help=f"run the {stage} stage")
    commands.add_parser("all", help="run every stage in dependency order")

    synth = commands.add_parser("synth", help="write a seeded synthetic corpus, prices and config")
    synth.add_argument("--out-dir", type=Path, required=True)
    synth.add_argument("--seed", type=int, default=0)
    return parser


def _run_synth(args) -> list[Path]:
    return write_synthetic_corpus(SyntheticCorpusSpec(seed=args.seed), args.out_dir)


def _run_stages(args) -> list[Path] | None:
    result = load_pipeline_config(args.config, args.overrides)
    if not result.ok:
        print(f"config error: {result.error}", file=sys.stderr)
        return None
    return run_pipeline(args.command, PipelineContext(result.config))


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse usage errors map to the config exit code
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG_ERROR
    start_application(args.command, log_level=args.log_level)

    try:
        written = _run_synth(args) if args.command == "synth" else _run_stages(args)
    except ConfigError as e:
        log_error("cli", f"config_error: key='{e.key}' error='{e.message}'")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except TweetSignalError as e:
        log_error("cli", f"stage_failed: command='{args.command}' error_type='{type(e).__name__}' error='{e}'")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        formatted = "".join(traceback.format_exception(type(e), e, e.__traceback__)).strip()
        log_error("cli", f"unhandled_exception: {formatted}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR

    if written is None:
        return EXIT_CONFIG_ERROR

    for path in written:
        print(path)
    log_info("cli", f"command_completed: command='{args.command}' artifacts={len(written)}")
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
