"""
Command-line front end: inspect, resample, benchmark, report and fetch.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from dotenv import load_dotenv

from .artifact_writer import ArtifactWriter
from .benchmark import BenchmarkReport, run_benchmark
from .binarization_parser import binarization_for_dataset
from .cell_cache import CellCache
from .classifiers import train
from .counterfactual_engine import ToleranceTable, compute_cf_set
from .dataset import binarize, dataset_to_csv_text, feature_stats, load_csv, summarize
from .dataset_fetcher import SOURCES, VARIANTS, DatasetFetcher, load_variant, resolve_variant
from .errors import (EXIT_ALGORITHM, EXIT_IO, EXIT_OK, EXIT_VALIDATION, ConfigError,
                     OversamplingError)
from .reporting import REPORT_FILE, safe_name, winner_summary_lines, write_report
from .resamplers import resample
from .resampling import DEFAULT_MAX_DIFFS, DEFAULT_TOLERANCE_FACTOR, Method
from .run_config import DEFAULT_OUT_DIR, load_run_config

load_dotenv()

_logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s:%(levelname)s:%(name)s:%(message)s"


def configure_logging(level=None):
    level = (level or os.getenv("OVERSAMPLING_LOG_LEVEL") or "WARNING").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"unknown log level {level!r}")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger("oversampling")
    root.handlers = [handler]
    root.setLevel(level)
    root.propagate = False


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _factor(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"tolerance must be >= 0, got {text}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING (default) or ERROR")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--config", required=True, help="JSON run configuration")
    run.add_argument("--seed", type=_seed, help="base seed (overrides the config)")
    run.add_argument("--jobs", type=_positive_int, help="worker processes")
    run.add_argument("--out", help="output directory")
    run.add_argument("--tolerance", type=_factor, help="CFA tolerance factor (default 0.1)")
    run.add_argument("--max-diffs", type=_positive_int,
                     help="CFA maximum difference-features per pair (default 2)")
    run.add_argument("--verify", action="store_true",
                     help="drop CFA candidates the verification classifier labels negative")

    parser = argparse.ArgumentParser(
        prog="oversampling",
        description="Counterfactual and SMOTE-family oversampling for imbalanced data")
    commands = parser.add_subparsers(dest="command", required=True)

    inspect = commands.add_parser("inspect", parents=[common],
                                  help="class counts and counterfactual-pair diagnostics")
    inspect.add_argument("dataset", help="CSV path or registered variant (e.g. D1)")
    inspect.add_argument("--binarization", help='e.g. "3-vs-R" or "4-vs-5"')
    inspect.add_argument("--label-column", help="label column name or index (default: last)")
    inspect.add_argument("--no-header", action="store_true", help="CSV has no header row")
    inspect.add_argument("--tolerance", type=_factor, default=DEFAULT_TOLERANCE_FACTOR)
    inspect.add_argument("--max-diffs", type=_positive_int, default=DEFAULT_MAX_DIFFS)
    inspect.add_argument("--jobs", type=_positive_int, default=1)
    inspect.set_defaults(handler=cmd_inspect)

    resample_cmd = commands.add_parser("resample", parents=[common, run],
                                       help="oversample one dataset with one method")
    resample_cmd.set_defaults(handler=cmd_resample)

    benchmark = commands.add_parser("benchmark", parents=[common, run],
                                    help="cross-validated sweep of methods x classifiers")
    benchmark.add_argument("--fresh", action="store_true", help="ignore cached cells")
    benchmark.set_defaults(handler=cmd_benchmark)

    report = commands.add_parser("report", parents=[common],
                                 help="re-render tables and ROC files from report.json")
    report.add_argument("--out", help="output directory holding report.json")
    report.set_defaults(handler=cmd_report)

    fetch = commands.add_parser("fetch", parents=[common],
                                help="download public datasets into the data directory")
    fetch.add_argument("names", nargs="*",
                       help=f"sources {sorted(SOURCES)} or variant ids; default: all sources")
    fetch.add_argument("--data-dir", help="target directory (default OVERSAMPLING_DATA_DIR)")
    fetch.add_argument("--force", action="store_true", help="download again if present")
    fetch.set_defaults(handler=cmd_fetch)
    return parser


def _load_for_inspect(args):
    if Path(args.dataset).is_file():
        ds = load_csv(args.dataset, args.label_column, header=not args.no_header)
        if args.binarization:
            mode = binarization_for_dataset(args.binarization, ds.class_names)
            return binarize(ds, mode), args.dataset
        if not ds.is_binary:
            raise ConfigError(f"{args.dataset}: give --binarization for a multiclass dataset")
        return ds, args.dataset
    variant = resolve_variant(args.dataset)
    if args.binarization:
        raise ConfigError("a registered variant carries its own binarization")
    return load_variant(variant), f"{variant.id} {variant.name}"


def cmd_inspect(args):
    ds, name = _load_for_inspect(args)
    print(f"{name}: {summarize(ds).describe()}")
    tol = ToleranceTable.from_stats(feature_stats(ds), args.tolerance)
    cf = compute_cf_set(ds, tol, args.max_diffs, n_jobs=args.jobs)
    diagnostics = cf.diagnostics()
    print(f"pairs={diagnostics['pairs']} unpaired={diagnostics['unpaired_majority']} "
          f"paired={diagnostics['paired_majority']} "
          f"paired_minority={diagnostics['paired_minority']} "
          f"tolerance={args.tolerance} max_diffs={args.max_diffs}")
    histogram = diagnostics["pairs_by_diff_count"]
    print("pairs by difference count: " + (
        " ".join(f"{k}={histogram[k]}" for k in histogram) or "none"))
    return EXIT_OK


def _run_config(args):
    return load_run_config(args.config, seed=args.seed, jobs=args.jobs, out_dir=args.out,
                           tolerance=args.tolerance, max_diffs=args.max_diffs,
                           verify=args.verify)


def cmd_resample(args):
    config = _run_config(args)
    if len(config.datasets) != 1 or len(config.methods) != 1:
        raise ConfigError("resample needs exactly one dataset and one method")
    if config.methods[0].k_grid:
        raise ConfigError("resample needs a single k_neighbors; grids are searched by benchmark")
    bench = config.datasets[0].load()
    plan = replace(config.methods[0], seed=config.seed)
    verify_model = None
    if plan.method is Method.CFA and plan.verify:
        verify_model = train(config.verify_classifier.with_seed(config.seed), bench.dataset)
    result = resample(bench.dataset, plan, verify_model, n_jobs=config.jobs)

    stem = f"{safe_name(bench.id)}_{plan.method.value}"
    document = {
        "dataset": bench.id,
        "plan": plan.to_dict(),
        "n_original": result.n_original,
        "n_synthetic": result.n_synthetic,
        "class_counts": result.dataset.class_counts(),
        "diagnostics": result.diagnostics,
    }
    with ArtifactWriter(config.out_dir) as writer:
        writer.write(f"{stem}.csv", dataset_to_csv_text(result.dataset, result.provenance_column()))
        writer.write(f"{stem}.diagnostics.json", json.dumps(document, sort_keys=True, indent=2) + "\n")

    before = summarize(bench.dataset)
    after = result.dataset.class_counts()
    print(f"{bench.id} {plan.method.label}: minority {before.n_minority} -> "
          f"{after.get('positive', 0)}, majority {before.n_majority}, "
          f"synthetic={result.n_synthetic} shortfall={result.diagnostics.get('shortfall', 0)} "
          f"-> {config.out_dir / (stem + '.csv')}")
    return EXIT_OK


def cmd_benchmark(args):
    config = _run_config(args)
    if not config.classifiers:
        raise ConfigError("benchmark needs at least one classifier")
    datasets = config.load_datasets()
    with ArtifactWriter(config.out_dir) as writer:
        cache = CellCache(writer, enabled=not args.fresh)
        report = run_benchmark(datasets, config.methods, config.classifiers,
                               config.settings(), n_jobs=config.jobs, cache=cache)
        write_report(report, writer)

    for line in winner_summary_lines(report):
        print(line)
    print(f"cells={len(report.cells)} failed={report.failed_cells} "
          f"cached={cache.hits} leakage_violations={report.leakage_violations}")
    print(f"Report written to {config.out_dir / REPORT_FILE}")
    if report.cells and report.failed_cells == len(report.cells):
        _logger.error("Every benchmark cell failed")
        return EXIT_ALGORITHM
    return EXIT_OK


def cmd_report(args):
    out_dir = Path(args.out or os.getenv("OVERSAMPLING_OUT_DIR") or DEFAULT_OUT_DIR)
    path = out_dir / REPORT_FILE
    if not path.is_file():
        raise ConfigError(f"no report found at {path}")
    report = BenchmarkReport.from_json(path.read_text(encoding="utf-8"))
    with ArtifactWriter(out_dir) as writer:
        written = write_report(report, writer)
    for line in winner_summary_lines(report):
        print(line)
    print(f"Re-rendered {len(written)} files under {out_dir}")
    return EXIT_OK


def cmd_fetch(args):
    fetcher = DatasetFetcher(args.data_dir)
    names = args.names or sorted(SOURCES)
    sources = []
    for name in names:
        source = name.lower() if name.lower() in SOURCES else resolve_variant(name).source
        if source not in sources:
            sources.append(source)
    for source in sources:
        path = fetcher.fetch(source, force=args.force)
        print(f"{source}: {path}")
    for variant in VARIANTS.values():
        if variant.source in sources:
            print(f"  {variant.id} {variant.name} "
                  f"(expected minority={variant.n_minority} majority={variant.n_majority})")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure_logging(args.log_level)
        return args.handler(args)
    except OversamplingError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
