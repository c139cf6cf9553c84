"""Command-line entry point: ``portfolio run --config cfg.json``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .config import load_config
from .errors import ConfigError, StageError
from .fixture import write_fixture
from .pipeline import EXIT_CONFIG, EXIT_IO, run_pipeline, run_stage

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("PORTFOLIO_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="portfolio", description="Five-stage portfolio construction engine.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def staged(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="pipeline config (JSON)")
        p.add_argument("--workers", type=int, default=1, help="worker threads, 0 = auto")
        return p

    staged("run", "run all five stages and write report.json")
    staged("dea", "DEA efficiency screening -> dea_scores.csv")
    staged("sentiment", "lexicon sentiment gate -> sentiment_scores.csv")
    staged("cluster", "correlation clustering -> clusters.csv")
    staged("rank", "neural ranking within clusters -> ranking.csv")
    staged("optimize", "PSO/GA mean-variance weighting -> portfolios.json")

    g = sub.add_parser("gen-fixture", help="write the seeded synthetic dataset and a config")
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--firms", type=int, default=12)
    g.add_argument("--days", type=int, default=300)
    g.add_argument("--out", default="fixture", help="output directory")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    log = logging.getLogger("portfolio")

    if args.command == "gen-fixture":
        try:
            path = write_fixture(args.out, args.seed, args.firms, args.days)
        except (OSError, ValueError) as exc:
            log.error("gen-fixture: %s", exc)
            return EXIT_IO
        log.info("fixture written; config at %s", path)
        return 0

    if args.workers < 0:
        log.error("--workers must be >= 0")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            run_pipeline(cfg, args.workers)
        else:
            run_stage(args.command, cfg, args.workers)
    except StageError as exc:
        log.error("stage %s: %s", exc.stage, exc.cause)
        return exc.exit_code
    except OSError as exc:
        log.error("I/O: %s", exc)
        return EXIT_IO
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
