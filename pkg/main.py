"""
Urban GNSS Mode-Ambiguity Reduction
===================================
Single entry point. Without a sub-command it runs the full default
pipeline into ``output/``:

    1. Generate a street-canyon scene and a seeded Monte Carlo batch
    2. Select modes per epoch (baseline SPC and enhanced SPC)
    3. Evaluate: accuracy, RMS error, case histogram, plot-ready CSVs

Sub-commands
------------
simulate   scene.json + epochs/*.json (+ manifest)
batch      records.csv + batch_report.json (+ manifest)
select     one epoch through baseline / enhanced / both selectors
eval       report.csv, report.txt and plot data from a batch directory

Environment
-----------
URM_SEED overrides --seed for every sub-command.

Exit codes: 0 success, 1 one or more epochs failed, 2 invalid usage or input.

Usage:
    source venv/bin/activate && python main.py
    python main.py batch --epochs 200 --out-dir output/run1
"""

from __future__ import annotations

import argparse
import logging
import sys

import config
from src.cli.commands import cmd_batch, cmd_eval, cmd_select, cmd_simulate, resolve_seed

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Shadow matching + SPC mode-ambiguity reduction for urban GNSS.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="generate a scene and labelled epochs")
    p.add_argument("--config", default=None, help="scenario config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--out-dir", default=config.OUTPUT_DIR)

    p = sub.add_parser("batch", help="seeded Monte Carlo batch")
    p.add_argument("--config", default=None, help="scenario config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=config.BATCH_EPOCHS)
    p.add_argument("--workers", type=int, default=config.BATCH_WORKERS)
    p.add_argument("--k", type=int, default=config.NUM_SAMPLES)
    p.add_argument("--out-dir", default=config.OUTPUT_DIR)

    p = sub.add_parser("select", help="mode selection on one epoch")
    p.add_argument("--scene", required=True)
    p.add_argument("--epoch", required=True)
    p.add_argument("--modes", default=None, help="precomputed modes JSON (skips shadow matching)")
    p.add_argument("--method", choices=["spc", "enhanced", "both"], default="both")
    p.add_argument("--k", type=int, default=config.NUM_SAMPLES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--debug-dir", default=None, help="write SPC and multipath debug CSVs here")

    p = sub.add_parser("eval", help="evaluate a batch run directory")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--out", default=None, help=f"defaults to <run-dir>/{config.REPORT_FILE}")
    p.add_argument("--plots-dir", default=None, help="defaults to <run-dir>/plots")
    return parser


def run_default_pipeline() -> int:
    logger.info("=" * 62)
    logger.info("  Mode-Ambiguity Reduction: Full Pipeline")
    logger.info("=" * 62)
    seed = resolve_seed(None)

    logger.info("[1/3] Running %d-epoch batch (seed %d)...", config.BATCH_EPOCHS, seed)
    code = cmd_batch(None, seed, config.BATCH_EPOCHS, config.OUTPUT_DIR)

    logger.info("[2/3] Evaluating batch...")
    cmd_eval(config.OUTPUT_DIR)

    logger.info("[3/3] Done. Outputs in %s/", config.OUTPUT_DIR)
    logger.info("=" * 62)
    return code


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "simulate":
        return cmd_simulate(args.config, args.seed, args.epochs, args.out_dir)
    if args.command == "batch":
        return cmd_batch(args.config, args.seed, args.epochs, args.out_dir, args.workers, args.k)
    if args.command == "select":
        return cmd_select(
            args.scene,
            args.epoch,
            args.out,
            method=args.method,
            modes_path=args.modes,
            k=args.k,
            seed=args.seed,
            debug_dir=args.debug_dir,
        )
    if args.command == "eval":
        return cmd_eval(args.run_dir, args.out, args.plots_dir)
    return run_default_pipeline()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        return dispatch(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
