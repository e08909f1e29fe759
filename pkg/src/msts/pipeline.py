"""End-to-end runs: load, precompute distances, select, evaluate, report."""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .classify import (
    FoldAssignment,
    cv_accuracy,
    effective_k,
    make_folds,
    single_feature_predictions,
    test_accuracy,
)
from .dataset import TimeSeriesDataset, read_split, read_tabular, read_ts, stratified_subsample
from .dtw import (
    CacheError,
    DistanceTensor,
    WarpingParams,
    compute_distance_tensor,
    fingerprint,
    load_tensor,
    save_tensor,
)
from .info import ami_matrix
from .merit import SelectionResult, build_correlation_model, msts_select, wrapper_select
from .tabular import compare_random_subsets

__all__ = [
    "RunConfig",
    "obtain_tensor",
    "run_msts",
    "run_wrapper",
    "select",
    "trace_rows",
    "compare_tabular",
    "benchmark",
    "BENCHMARK_COLUMNS",
    "TRACE_COLUMNS",
]

log = logging.getLogger(__name__)

BENCHMARK_COLUMNS = (
    "dataset",
    "acc_msts",
    "acc_wrapper",
    "time_msts",
    "time_wrapper",
    "benchmark_acc",
    "features_msts",
    "features_wrapper",
)
TRACE_COLUMNS = ("subset", "size", "merit", "cv_accuracy", "selected")

CPU_TIME_SCOPE = {
    "msts": "single-feature CV predictions, AMI correlation model and merit search",
    "wrapper": "single-feature CV accuracies and the accuracy-scored search",
    "excluded": "dataset loading and DTW distance precompute",
}


@dataclass(frozen=True)
class RunConfig:
    train: str
    test: str | None = None
    method: str = "both"
    mode: str = "lookup-sum"
    k: int = 10
    fold_seed: int = 0
    window: int | None = None
    train_fraction: float = 1.0
    subsample_seed: int = 0
    normalize: bool = False
    cache: str | None = None

    def __post_init__(self):
        if self.method not in ("msts", "wrapper", "both"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.mode not in ("lookup-sum", "dependent"):
            raise ValueError(f"unknown classifier mode {self.mode!r}")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError(f"train fraction must lie in (0, 1], got {self.train_fraction}")

    @property
    def params(self) -> WarpingParams:
        return WarpingParams(self.window)

    def methods(self) -> tuple[str, ...]:
        return ("msts", "wrapper") if self.method == "both" else (self.method,)


def load_data(config: RunConfig) -> tuple[TimeSeriesDataset, TimeSeriesDataset | None]:
    if config.test is None:
        train, test = read_ts(config.train, normalize=config.normalize), None
    else:
        train, test = read_split(config.train, config.test, normalize=config.normalize)
    train = stratified_subsample(train, config.train_fraction, config.subsample_seed)
    return train, test


def obtain_tensor(
    train: TimeSeriesDataset, params: WarpingParams, cache: str | Path | None = None
) -> tuple[DistanceTensor, str]:
    """Load the distance tensor from ``cache`` when it matches, else compute (and store) it.

    Returns the tensor and one of ``"cache hit"``, ``"computed"``, ``"recomputed"``.
    """
    expected = fingerprint(train, params)
    status = "computed"
    if cache is not None and Path(cache).exists():
        try:
            tensor = load_tensor(cache, expected_fingerprint=expected)
            if tensor.n_instances == train.n_instances and tensor.n_features == train.n_features:
                return tensor, "cache hit"
            log.warning("cache %s has the wrong shape; recomputing", cache)
        except CacheError as exc:
            log.warning("%s; recomputing", exc)
        status = "recomputed"
    tensor = compute_distance_tensor(train, params)
    if cache is not None:
        save_tensor(tensor, cache)
    return tensor, status


def _warm_up() -> None:
    # trigger JIT compilation/loading outside the timed region
    ami_matrix(np.array([[0, 1, 1], [1, 1, 0]]), np.array([0, 1, 0]))


def run_msts(tensor: DistanceTensor, labels, folds: FoldAssignment) -> SelectionResult:
    """Single-feature predictions, AMI model and merit search, timed together."""
    _warm_up()
    start = time.process_time()
    pm = single_feature_predictions(tensor, labels, folds)
    model = build_correlation_model(pm, labels)
    result = msts_select(model)
    return replace(result, cpu_time_seconds=time.process_time() - start)


def run_wrapper(tensor: DistanceTensor, labels, folds: FoldAssignment) -> SelectionResult:
    """Forward search scored by cross-validated 1NN accuracy (single-feature pass included)."""
    start = time.process_time()
    result = wrapper_select(lambda s: cv_accuracy(tensor, labels, s, folds), tensor.n_features)
    return replace(result, cpu_time_seconds=time.process_time() - start)


def _fraction(subset, n: int) -> str:
    return f"{len(subset)}/{n}"


def select(config: RunConfig) -> dict:
    """Run the requested selection method(s) and build the report dictionary."""
    wall = time.perf_counter()
    train, test = load_data(config)
    if train.n_features < 2:
        raise ValueError(f"feature selection needs >= 2 features; {train.name} has {train.n_features}")
    tensor, cache_status = obtain_tensor(train, config.params, config.cache)
    k = effective_k(train.labels, config.k)
    folds = make_folds(train.labels, k, config.fold_seed)

    runners = {"msts": run_msts, "wrapper": run_wrapper}
    methods = {}
    for name in config.methods():
        result = runners[name](tensor, train.labels, folds)
        if test is not None:
            acc = test_accuracy(train, test, result.subset, config.params, config.mode)
            result = replace(result, test_accuracy=acc)
        entry = result.to_dict()
        entry["features_selected"] = _fraction(result.subset, train.n_features)
        methods[name] = entry

    benchmark_acc = None
    if test is not None:
        benchmark_acc = test_accuracy(train, test, range(train.n_features), config.params, config.mode)

    return {
        "config": asdict(config),
        "dataset": train.name,
        "n_features": train.n_features,
        "n_train": train.n_instances,
        "n_test": None if test is None else test.n_instances,
        "folds": k,
        "methods": methods,
        "benchmark_accuracy": benchmark_acc,
        "meta": {
            "cache": cache_status,
            "cpu_time_scope": CPU_TIME_SCOPE,
            "wall_clock_seconds": time.perf_counter() - wall,
        },
    }


def trace_rows(config: RunConfig) -> list[dict]:
    """Every candidate the merit search scored, with its cross-validated accuracy.

    The best-merit candidate of each subset size is flagged ``selected``.
    """
    train, _ = load_data(config)
    tensor, _ = obtain_tensor(train, config.params, config.cache)
    folds = make_folds(train.labels, effective_k(train.labels, config.k), config.fold_seed)
    result = run_msts(tensor, train.labels, folds)
    rows = []
    for step in result.trace.steps:
        if step.size < 2:
            continue
        for subset, score in step.candidates:
            rows.append(
                {
                    "subset": " ".join(map(str, subset)),
                    "size": len(subset),
                    "merit": score,
                    "cv_accuracy": cv_accuracy(tensor, train.labels, subset, folds),
                    "selected": subset == step.subset,
                }
            )
    return rows


def compare_tabular(
    path: str | Path,
    label_column: int,
    subset_size: int = 5,
    count: int = 100,
    seed: int = 0,
    k: int = 10,
    fold_seed: int = 0,
    header: bool = False,
) -> dict:
    tds = read_tabular(path, label_column, header=header)
    folds = make_folds(tds.labels, k, fold_seed)
    comparison = compare_random_subsets(tds, subset_size, count, seed, folds)
    out = comparison.to_dict()
    out["config"] = {
        "data": str(path),
        "label_column": label_column,
        "subset_size": subset_size,
        "count": count,
        "seed": seed,
        "k": k,
        "fold_seed": fold_seed,
    }
    return out


def read_manifest(path: str | Path) -> list[tuple[str, RunConfig]]:
    """Manifest CSV with columns ``name,train,test`` and optional ``cache``.

    Relative paths are resolved against the manifest's directory.
    """
    path = Path(path)

    def resolve(value):
        return str((path.parent / value).resolve()) if value else None

    entries = []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            entries.append(
                (
                    row["name"],
                    RunConfig(train=resolve(row["train"]), test=resolve(row["test"]), cache=resolve(row.get("cache"))),
                )
            )
    return entries


def benchmark(entries: Iterable[tuple[str, RunConfig]]) -> list[dict]:
    """One row per dataset; a failing dataset gets an ``ERROR`` row and the run continues."""
    rows = []
    for name, config in entries:
        try:
            report = select(replace(config, method="both"))
        except Exception as exc:  # noqa: BLE001 - recorded in-row by design
            log.error("%s failed: %s", name, exc)
            row = dict.fromkeys(BENCHMARK_COLUMNS, "")
            row["dataset"] = name
            row["acc_msts"] = f"ERROR: {exc}"
            rows.append(row)
            continue
        m, w = report["methods"]["msts"], report["methods"]["wrapper"]
        rows.append(
            {
                "dataset": name,
                "acc_msts": m["test_accuracy"],
                "acc_wrapper": w["test_accuracy"],
                "time_msts": m["cpu_time_seconds"],
                "time_wrapper": w["cpu_time_seconds"],
                "benchmark_acc": report["benchmark_accuracy"],
                "features_msts": m["features_selected"],
                "features_wrapper": w["features_selected"],
            }
        )
    return rows


def to_csv(rows: list[dict], columns: Iterable[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def report_to_csv(report: dict) -> str:
    """Flatten a selection report to one row per method."""
    rows = []
    for name, m in report["methods"].items():
        rows.append(
            {
                "dataset": report["dataset"],
                "method": name,
                "subset": " ".join(map(str, m["subset"])),
                "features_selected": m["features_selected"],
                "test_accuracy": m["test_accuracy"],
                "cpu_time_seconds": m["cpu_time_seconds"],
                "stop_reason": m["trace"]["stop_reason"],
                "benchmark_accuracy": report["benchmark_accuracy"],
            }
        )
    columns = (
        "dataset",
        "method",
        "subset",
        "features_selected",
        "test_accuracy",
        "cpu_time_seconds",
        "stop_reason",
        "benchmark_accuracy",
    )
    return to_csv(rows, columns)
