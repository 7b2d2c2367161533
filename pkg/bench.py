import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from qiebench import __version__
from qiebench.config import extend_seeds, load_config, parse_seed_list
from qiebench.data import gen_high_rank_noise, gen_parity, write_csv
from qiebench.harness import run_benchmark
from qiebench.methods import validate_methods
from qiebench.numerics import derive_stream
from qiebench.report import emit_report, load_report_json, load_timing_csv, render_csv, render_markdown

load_dotenv()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PARTIAL = 4


def validate_environment():
    """Validate optional QIEBENCH_* environment variables"""
    invalid_vars = []

    level = os.getenv("QIEBENCH_LOG_LEVEL")
    if level and not isinstance(logging.getLevelName(level.upper()), int):
        invalid_vars.append("QIEBENCH_LOG_LEVEL (not a logging level)")

    jobs = os.getenv("QIEBENCH_JOBS")
    if jobs:
        try:
            if int(jobs) < 1:
                invalid_vars.append("QIEBENCH_JOBS (must be >= 1)")
        except ValueError:
            invalid_vars.append("QIEBENCH_JOBS (not a valid integer)")

    if invalid_vars:
        raise ValueError(f"Environment validation failed:\nInvalid variables: {', '.join(invalid_vars)}\n")


def setup_logging():
    logging.basicConfig(
        level=os.getenv("QIEBENCH_LOG_LEVEL", "INFO").upper(),
        format=LOG_FORMAT,
        handlers=[logging.FileHandler(os.getenv("QIEBENCH_LOG_FILE", "bench.log")), logging.StreamHandler()],
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qiebench", description="Benchmark quantum-inspired encodings against classical feature maps")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run the dataset x method x seed matrix and write reports")
    run.add_argument("--config", required=True, help="key-value run config file")
    run.add_argument("--seeds", help="comma-separated seeds, replacing the config's")
    run.add_argument("--datasets", help="comma-separated subset of the config's datasets")
    run.add_argument("--methods", help="comma-separated methods, replacing the config's")
    run.add_argument("--out", help="output directory")
    run.add_argument("--jobs", type=int, help="concurrent (dataset, seed) units")
    run.add_argument("--extended-seeds", action="store_true", help="append seeds 100,200,300,400,500")

    gen = commands.add_parser("gen-data", help="write a synthetic control task as CSV")
    gen.add_argument("--task", required=True, choices=("parity", "highrank"))
    gen.add_argument("--out", required=True, help="CSV path")
    gen.add_argument("--n", type=int, help="rows (parity 10000, highrank 5000)")
    gen.add_argument("--d", type=int, help="features (parity 20, highrank 200)")
    gen.add_argument("--k", type=int, default=10, help="parity order")
    gen.add_argument("--label-noise", type=float, default=0.0, help="highrank label flip fraction")
    gen.add_argument("--seed", type=int, default=0, help="data seed")

    rep = commands.add_parser("report", help="render a results.json")
    rep.add_argument("--in", dest="input", required=True, help="results.json path")
    rep.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    rep.add_argument("--out", help="write here instead of stdout")
    return parser


def _split_names(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [item.strip() for item in text.split(",") if item.strip()]


def cmd_run(args) -> int:
    config = load_config(args.config)
    seeds = parse_seed_list(args.seeds) if args.seeds else None
    if args.extended_seeds:
        seeds = extend_seeds(seeds or config.seeds)
    methods = _split_names(args.methods)
    if methods is not None:
        methods = tuple(validate_methods(methods))
    config = config.with_overrides(seeds=seeds, methods=methods, out_dir=args.out, jobs=args.jobs)
    config = config.select_datasets(_split_names(args.datasets))

    report = run_benchmark(config, jobs=args.jobs)
    emit_report(report, config.out_dir)
    summary = report.summary
    logging.info(
        f"{summary['cells']} cells ({summary['ok']} ok, {summary['infeasible']} infeasible, {summary['error']} failed); "
        f"{summary['worse']} of {summary['comparisons']} comparisons significantly worse, {summary['better']} better"
    )
    if report.errors or summary["error"]:
        logging.warning(f"Run finished with {len(report.errors)} dataset error(s) and {summary['error']} failed cell(s)")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_gen_data(args) -> int:
    stream = derive_stream(args.seed, f"{args.task}/generate")
    if args.task == "parity":
        dataset = gen_parity(n=args.n or 10000, d=args.d or 20, k=args.k, stream=stream)
    else:
        dataset = gen_high_rank_noise(n=args.n or 5000, d=args.d or 200, stream=stream, label_noise=args.label_noise)
    write_csv(dataset, args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    data = load_report_json(args.input)
    if args.format == "csv":
        text = render_csv(data)
    else:
        timing = load_timing_csv(os.path.join(os.path.dirname(os.path.abspath(args.input)), "timing.csv"))
        text = render_markdown(data, timing)

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logging.info(f"Wrote {args.format} report to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "gen-data": cmd_gen_data, "report": cmd_report}


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    try:
        validate_environment()
        setup_logging()
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        logging.info("Run interrupted by user")
        return EXIT_UNEXPECTED
    except ValueError as e:
        logging.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logging.error(f"I/O error: {e}")
        return EXIT_IO
    except Exception as e:
        logging.error(f"qiebench encountered an unexpected error: {e}", exc_info=True)
        return EXIT_UNEXPECTED


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
