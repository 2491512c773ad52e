"""
Command-line interface.

Subcommands:
    run       Optimization campaign: run records, evals.csv, ertd.csv,
              ertd_functions.csv, popt.csv and a console summary
    regress   Regression quality campaign: q2.csv
    plotdata  Plot-ready ERTD data with x = log10(evals / d)
    replay    Re-execute a run from its provenance record

Invalid input exits with code 2 and a one-line message on stderr.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from core.bo_loop import replay
from core.campaign import EVALS_HEADER, plotdata, run_campaign, run_regression
from core.configs import UnknownConfigError
from core.formatting import evals_rows, format_table, write_csv
from core.logging_config import ProgressLogger
from core.validation import (
    CampaignSpec,
    RegressionSpec,
    ValidationResult,
    parse_configs,
    parse_dims,
    parse_functions,
    parse_variants,
    resolve_seed,
)


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class InputError(Exception):
    """Invalid command-line input."""


def _checked(value):
    if isinstance(value, ValidationResult):
        raise InputError(value.error_message)
    return value


def _session_logger(out_dir: str, name: str, log_dir: Optional[str]) -> ProgressLogger:
    return ProgressLogger(session_name=name, log_dir=log_dir or str(Path(out_dir) / "logs"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bocoa",
        description="Factor study of EGO configurations on a BBOB-style testbed",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run an optimization campaign")
    run_parser.add_argument("--configs", default="all", help="Comma-separated configuration names, or 'all'")
    run_parser.add_argument("--functions", default="all", help="Comma-separated functions (f1 or 1), or 'all'")
    run_parser.add_argument("--dims", default="3", help="Comma-separated dimensions")
    run_parser.add_argument("--instances", type=int, default=15, help="Instances per function and dimension")
    run_parser.add_argument("--seed", type=int, default=1, help="Base seed (overridden by BOCOA_SEED)")
    run_parser.add_argument("--jobs", type=int, default=1, help="Worker processes")
    run_parser.add_argument("--out", default="results", help="Output directory")
    run_parser.add_argument("--budget-multiplier", type=int, default=None,
                            help="Evaluations per dimension (default: 30)")
    run_parser.add_argument("--no-random", action="store_true", help="Skip the random-search baseline")
    run_parser.add_argument("--log-dir", default=None, help="Log directory (default: <out>/logs)")

    regress_parser = subparsers.add_parser("regress", help="Compare GP variants on regression quality")
    regress_parser.add_argument("--variants", default="all", help="Comma-separated GP variants, or 'all'")
    regress_parser.add_argument("--functions", default="all", help="Comma-separated functions, or 'all'")
    regress_parser.add_argument("--dims", default="5", help="Comma-separated dimensions")
    regress_parser.add_argument("--instances", type=int, default=15, help="Instances per function and dimension")
    regress_parser.add_argument("--seed", type=int, default=1, help="Base seed (overridden by BOCOA_SEED)")
    regress_parser.add_argument("--jobs", type=int, default=1, help="Worker processes")
    regress_parser.add_argument("--out", default="results", help="Output directory")
    regress_parser.add_argument("--ertd-dir", default=None,
                                help="Campaign directory whose ertd_functions.csv fills rank_ertd")
    regress_parser.add_argument("--log-dir", default=None, help="Log directory (default: <out>/logs)")

    plot_parser = subparsers.add_parser("plotdata", help="Write plot-ready ERTD data")
    plot_parser.add_argument("paths", nargs="+", help="ertd.csv or ertd_functions.csv files")
    plot_parser.add_argument("--out", default="ertd_plot.csv", help="Output CSV file")

    replay_parser = subparsers.add_parser("replay", help="Re-execute a run from its provenance record")
    replay_parser.add_argument("record", help="Run record JSON file")
    replay_parser.add_argument("--out", default=None, help="Write the replayed evals.csv rows here")
    return parser


def cmd_run(args) -> int:
    spec = CampaignSpec(
        configs=_checked(parse_configs(args.configs)),
        functions=_checked(parse_functions(args.functions)),
        dims=_checked(parse_dims(args.dims)),
        instances=args.instances,
        seed=_checked(resolve_seed(args.seed)),
        out_dir=args.out,
        jobs=args.jobs,
        include_random=not args.no_random,
        budget_multiplier=args.budget_multiplier,
    )
    logger = _session_logger(args.out, "bocoa_run", args.log_dir)
    logger.start_progress_monitoring()
    try:
        result = run_campaign(spec, logger)
    finally:
        logger.close_session()

    print(format_table(result.summary))
    if result.failed:
        print(f"\n❌ {len(result.failed)} run(s) failed:", file=sys.stderr)
        for run_id in result.failed:
            print(f"  {run_id}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"\n✅ {len(result.results)} runs written to {result.out_dir}")
    return EXIT_OK


def cmd_regress(args) -> int:
    if args.ertd_dir is not None and not (Path(args.ertd_dir) / "ertd_functions.csv").exists():
        raise InputError(f"Invalid ertd-dir: {args.ertd_dir}/ertd_functions.csv not found")
    spec = RegressionSpec(
        variants=_checked(parse_variants(args.variants)),
        functions=_checked(parse_functions(args.functions)),
        dims=_checked(parse_dims(args.dims)),
        instances=args.instances,
        seed=_checked(resolve_seed(args.seed)),
        out_dir=args.out,
        jobs=args.jobs,
        ertd_dir=args.ertd_dir,
    )
    logger = _session_logger(args.out, "bocoa_regress", args.log_dir)
    try:
        entries = run_regression(spec, logger)
    finally:
        logger.close_session()

    for e in entries:
        print(f"{e.variant.value:<12} {e.fid.label:<4} d={e.d:<3} Q2 {e.q2_mean:.6f}  KS p {e.ks_mean:.3f}")
    skipped = [e for e in entries if e.skipped]
    if skipped:
        print(f"\n❌ Skipped instances after training failures:", file=sys.stderr)
        for e in skipped:
            print(f"  {e.variant.value} {e.fid.label} d={e.d}: {e.skipped}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"\n✅ {len(entries)} rows written to {Path(args.out) / 'q2.csv'}")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    missing = [p for p in args.paths if not Path(p).exists()]
    if missing:
        raise InputError(f"Invalid paths: {', '.join(missing)} not found")
    try:
        count = plotdata(args.paths, args.out)
    except ValueError as e:
        raise InputError(str(e)) from e
    print(f"✅ {count} rows written to {args.out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    path = Path(args.record)
    if not path.exists():
        raise InputError(f"Invalid record: {path} not found")
    try:
        record = json.loads(path.read_text())
        result = replay(record)
    except (json.JSONDecodeError, KeyError, UnknownConfigError) as e:
        raise InputError(f"Invalid record {path}: {e}") from e

    rows = evals_rows(result)
    if args.out:
        write_csv(args.out, EVALS_HEADER, rows)
    stored = record.get("values")
    if stored is not None and [float(v) for v in stored] != [float(v) for v in result.values]:
        print(f"❌ Replay of {result.run_id} diverges from the stored values", file=sys.stderr)
        return EXIT_FAILURE
    print(f"✅ Replayed {result.run_id}: {result.evaluations} evaluations, best {result.best_value:.6g}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "regress": cmd_regress,
    "plotdata": cmd_plotdata,
    "replay": cmd_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
