"""Command-line interface.

Subcommands mirror the pipeline stages (``index``, ``retrieve``, ``generate``,
``semigold``, ``judge``, ``report``) plus ``run`` for all stages in order and
``fixture`` to materialize the bundled synthetic corpora.

Exit codes: 0 success, 1 usage/config error, 2 data integrity error,
3 provider failure budget exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import EXIT_USAGE, RagmeterError
from .fixture import VARIANTS, write_fixture
from .judge import Comparator
from .pipeline import STAGES, PipelineRun

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for data
    # integrity problems, so usage errors exit 1 instead.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_k_values(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid k list {raw!r}; expected e.g. 1,5,10")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, type=Path, help="path to the JSON run config")
    parser.add_argument("--k", type=_parse_k_values, default=None, help="override k values, e.g. 1,5,10")
    parser.add_argument(
        "--comparator",
        choices=[c.value for c in Comparator],
        default=None,
        help="override the answer comparator",
    )
    parser.add_argument("--mock", action="store_true", default=None, help="use the deterministic mock providers")
    parser.add_argument("--cache-dir", type=Path, default=None, help="override the provider cache directory")
    parser.add_argument("--out", type=Path, default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ragmeter", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for stage in STAGES:
        stage_parser = subparsers.add_parser(stage, help=f"run the {stage} stage")
        _add_run_flags(stage_parser)

    run_parser = subparsers.add_parser("run", help="run all stages in order")
    _add_run_flags(run_parser)

    fixture_parser = subparsers.add_parser("fixture", help="write the bundled synthetic fixture")
    fixture_parser.add_argument("--out", required=True, type=Path, help="directory for the fixture")
    fixture_parser.add_argument(
        "--variant", choices=[*VARIANTS, "both"], default="both", help="which corpus variant to write"
    )
    return parser


def _pipeline_from_args(args: argparse.Namespace) -> PipelineRun:
    config = load_config(
        args.config,
        k_values=args.k,
        comparator=args.comparator,
        mock=True if args.mock else None,
        cache_dir=args.cache_dir,
        out_dir=args.out,
    )
    return PipelineRun(config)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "fixture":
            variants = VARIANTS if args.variant == "both" else (args.variant,)
            for variant in variants:
                paths = write_fixture(args.out, variant)
                print(f"wrote {variant} fixture: {paths.corpus} {paths.dataset}")
            return 0
        pipeline = _pipeline_from_args(args)
        if args.command == "run":
            report_path = pipeline.run_all()
            print(f"report: {report_path}")
        else:
            for path in pipeline.run_stage(args.command):
                print(path)
        return 0
    except RagmeterError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
