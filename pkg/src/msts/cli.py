"""Command-line front end.

Exit codes: 0 success, 2 input or parse error, 3 runtime or selection error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import DatasetFormatError, SchemaMismatchError
from .pipeline import (
    BENCHMARK_COLUMNS,
    TRACE_COLUMNS,
    RunConfig,
    benchmark,
    compare_tabular,
    load_data,
    obtain_tensor,
    read_manifest,
    report_to_csv,
    select,
    to_csv,
    trace_rows,
)

log = logging.getLogger("msts")

EXIT_INPUT = 2
EXIT_RUNTIME = 3


def _add_data_args(p: argparse.ArgumentParser, with_test: bool = True) -> None:
    p.add_argument("--train", required=True, help="training split (.ts or .ts.gz)")
    if with_test:
        p.add_argument("--test", help="test split (.ts or .ts.gz)")
    p.add_argument("--cache", help="distance tensor cache file")
    p.add_argument("--window", type=int, default=None, help="Sakoe-Chiba band half-width (default: none)")
    p.add_argument("--normalize", action="store_true", help="z-normalise every channel")
    p.add_argument("--train-fraction", type=float, default=1.0)
    p.add_argument("--subsample-seed", type=int, default=0)


def _add_selection_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=10, help="cross-validation folds")
    p.add_argument("--fold-seed", type=int, default=0)
    p.add_argument("--mode", choices=("lookup-sum", "dependent"), default="lookup-sum",
                   help="distance used for test evaluation")
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msts", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="compute and cache per-feature DTW matrices")
    _add_data_args(p, with_test=False)

    p = sub.add_parser("select", help="run MSTS and/or wrapper selection")
    _add_data_args(p)
    _add_selection_args(p)
    p.add_argument("--method", choices=("msts", "wrapper", "both"), default="both")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("trace", help="merit and CV accuracy of every candidate MSTS scores")
    _add_data_args(p)
    _add_selection_args(p)

    p = sub.add_parser("compare-tabular", help="classic vs classifier-output merit on categorical data")
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", type=int, required=True)
    p.add_argument("--header", action="store_true", help="first row holds column names")
    p.add_argument("--subset-size", type=int, default=5)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--fold-seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("benchmark", help="run both methods on every dataset in a manifest")
    p.add_argument("--manifest", required=True, help="CSV with columns name,train,test[,cache]")
    p.add_argument("--out")
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        train=args.train,
        test=getattr(args, "test", None),
        method=getattr(args, "method", "both"),
        mode=getattr(args, "mode", "lookup-sum"),
        k=getattr(args, "k", 10),
        fold_seed=getattr(args, "fold_seed", 0),
        window=args.window,
        train_fraction=args.train_fraction,
        subsample_seed=args.subsample_seed,
        normalize=args.normalize,
        cache=args.cache,
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _precompute(args) -> None:
    config = _config(args)
    train, _ = load_data(config)
    tensor, status = obtain_tensor(train, config.params, config.cache)
    log.info("%s: %d features x %d instances", status, tensor.n_features, tensor.n_instances)
    print(status)


def _select(args) -> None:
    report = select(_config(args))
    text = report_to_csv(report) if args.format == "csv" else json.dumps(report, indent=2) + "\n"
    _emit(text, args.out)


def _trace(args) -> None:
    _emit(to_csv(trace_rows(_config(args)), TRACE_COLUMNS), args.out)


def _compare(args) -> None:
    result = compare_tabular(
        args.data, args.label_col, args.subset_size, args.count, args.seed, args.k, args.fold_seed, args.header
    )
    _emit(json.dumps(result, indent=2) + "\n", args.out)
    log.info("pearson r = %.4f", result["pearson_r"])


def _benchmark(args) -> None:
    _emit(to_csv(benchmark(read_manifest(args.manifest)), BENCHMARK_COLUMNS), args.out)


COMMANDS = {
    "precompute": _precompute,
    "select": _select,
    "trace": _trace,
    "compare-tabular": _compare,
    "benchmark": _benchmark,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except (DatasetFormatError, SchemaMismatchError, FileNotFoundError, IsADirectoryError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except (ValueError, IndexError, OSError) as exc:
        log.error("%s error: %s", args.command, exc)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
