"""Acceptance suite: one test per criterion, one PASS/FAIL/NOT RUN line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python -m tests.test_acceptance`` for the lines alone.

Datasets that are not bundled are looked up in ``tests/data`` and in the
directory named by ``MSTS_DATA_DIR``:

* ``RacketSports_TRAIN.ts[.gz]`` / ``RacketSports_TEST.ts[.gz]``
* ``ERing_TRAIN.ts[.gz]`` / ``ERing_TEST.ts[.gz]``
* ``soybean-large.data`` (UCI, class in column 0)
* ``agaricus-lepiota.data`` (UCI Mushroom, class in column 0)

A criterion whose data is absent reports NOT RUN and is skipped; it is never
counted as a pass.
"""

from __future__ import annotations

import math
import os
import statistics
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr
from sklearn.metrics import adjusted_mutual_info_score

from msts.classify import make_folds
from msts.dataset import read_split, read_tabular
from msts.dtw import WarpingParams, compute_distance_tensor, dtw_univariate
from msts.info import ContingencyTable, ami, entropy, expected_mi, mutual_information
from msts.merit import exhaustive_best_merit, merit, msts_select
from msts.pipeline import RunConfig, run_msts, run_wrapper, select, trace_rows
from msts.tabular import compare_random_subsets

from .test_dtw import brute_force_dtw
from .test_info import emi_formula, entropy_oracle, mi_oracle, permutation_mi
from .test_merit import merit_reference, random_model

DATA = Path(__file__).parent / "data"
RESULTS: list[str] = []


def record(criterion: str, passed: bool | None, detail: str) -> None:
    status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[passed]
    RESULTS.append(f"[{status}] {criterion}: {detail}")


def _search_dirs() -> list[Path]:
    dirs = [DATA]
    if os.environ.get("MSTS_DATA_DIR"):
        dirs.append(Path(os.environ["MSTS_DATA_DIR"]))
    return dirs


def find_file(*names: str) -> Path | None:
    for d in _search_dirs():
        for name in names:
            if (d / name).exists():
                return d / name
    return None


def find_split(name: str) -> tuple[Path, Path] | None:
    train = find_file(f"{name}_TRAIN.ts.gz", f"{name}_TRAIN.ts")
    test = find_file(f"{name}_TEST.ts.gz", f"{name}_TEST.ts")
    return (train, test) if train and test else None


def require(criterion: str, found, what: str):
    if found is None:
        record(criterion, None, f"{what} not found in {', '.join(map(str, _search_dirs()))}")
        pytest.skip(f"{what} not available")
    return found


def end_to_end(paths: tuple[Path, Path]) -> tuple[dict, float]:
    start = time.perf_counter()
    report = select(RunConfig(train=str(paths[0]), test=str(paths[1]), method="msts"))
    return report, time.perf_counter() - start


# ---------------------------------------------------------------------------
# 1-3: end-to-end accuracy


def test_c1_basic_motions():
    name = "C1 BasicMotions end-to-end"
    paths = require(name, find_split("BasicMotions"), "BasicMotions split")
    report, seconds = end_to_end(paths)
    m = report["methods"]["msts"]
    size, acc, bench = len(m["subset"]), m["test_accuracy"], report["benchmark_accuracy"]
    ok = size <= 3 and acc >= 0.95 and abs(bench - 0.975) <= 0.03 and seconds < 120
    record(
        name,
        ok,
        f"subset {m['subset']} (size {size} <= 3), test acc {acc:.3f} >= 0.95, "
        f"benchmark {bench:.3f} vs 0.975 +/- 0.03, {seconds:.1f}s < 120s",
    )
    assert ok


def test_c2_racket_sports():
    name = "C2 RacketSports accuracy"
    paths = require(name, find_split("RacketSports"), "RacketSports split")
    report, seconds = end_to_end(paths)
    acc, bench = report["methods"]["msts"]["test_accuracy"], report["benchmark_accuracy"]
    ok = abs(acc - 0.803) <= 0.05 and abs(bench - 0.803) <= 0.05 and seconds < 120
    record(name, ok, f"MSTS acc {acc:.3f}, benchmark {bench:.3f} (both 0.803 +/- 0.05), {seconds:.1f}s < 120s")
    assert ok


def test_c3_ering():
    name = "C3 ERing accuracy"
    paths = require(name, find_split("ERing"), "ERing split")
    report, seconds = end_to_end(paths)
    m = report["methods"]["msts"]
    acc, size = m["test_accuracy"], len(m["subset"])
    ok = abs(acc - 0.893) <= 0.07 and size <= 3 and seconds < 60
    record(name, ok, f"MSTS acc {acc:.3f} (0.893 +/- 0.07), subset size {size} <= 3, {seconds:.1f}s < 60s")
    assert ok


# ---------------------------------------------------------------------------
# 4: cost ordering


def median_cpu_times(paths: tuple[Path, Path], repeats: int = 7) -> tuple[float, float]:
    """Median selection CPU time of each method on one shared tensor."""
    train, _ = read_split(*paths)
    tensor = compute_distance_tensor(train)
    folds = make_folds(train.labels, 10, 0)
    run_msts(tensor, train.labels, folds)  # JIT warm-up outside the measurements
    run_wrapper(tensor, train.labels, folds)
    msts = [run_msts(tensor, train.labels, folds).cpu_time_seconds for _ in range(repeats)]
    wrapper = [run_wrapper(tensor, train.labels, folds).cpu_time_seconds for _ in range(repeats)]
    return statistics.median(msts), statistics.median(wrapper)


def test_c4_cost_ordering():
    name = "C4 cpu_time(MSTS) <= cpu_time(Wrapper)"
    details, verdicts = [], []
    for dataset in ("BasicMotions", "RacketSports"):
        paths = find_split(dataset)
        if paths is None:
            details.append(f"{dataset} NOT RUN (data missing)")
            verdicts.append(None)
            continue
        t_msts, t_wrapper = median_cpu_times(paths)
        verdicts.append(t_msts <= t_wrapper)
        details.append(f"{dataset} median {t_msts * 1e3:.2f}ms vs {t_wrapper * 1e3:.2f}ms")
    passed = False if False in verdicts else (None if None in verdicts else True)
    record(name, passed, "; ".join(details))
    assert False not in verdicts
    if None in verdicts:
        pytest.skip("only part of the criterion could run: " + "; ".join(details))


# ---------------------------------------------------------------------------
# 5: tabular merit correlation


@pytest.mark.parametrize(
    "dataset, files, threshold",
    [
        ("Soybean", ("soybean-large.data", "soybean-large.csv"), 0.9),
        ("Mushroom", ("agaricus-lepiota.data", "mushroom.csv"), 0.7),
    ],
)
def test_c5_merit_correlation(dataset, files, threshold):
    name = f"C5 {dataset} original vs proposed merit"
    path = require(name, find_file(*files), f"{dataset} file ({' or '.join(files)})")
    start = time.perf_counter()
    tds = read_tabular(path, label_column=0)
    r = compare_random_subsets(tds, subset_size=5, count=100, seed=0).pearson_r
    seconds = time.perf_counter() - start
    ok = r >= threshold and seconds < 60
    record(name, ok, f"Pearson r {r:.4f} >= {threshold}, {seconds:.1f}s < 60s")
    assert ok


# ---------------------------------------------------------------------------
# 6: merit tracks accuracy


def test_c6_merit_accuracy_association():
    name = "C6 JapaneseVowels merit vs CV accuracy"
    paths = require(name, find_split("JapaneseVowels"), "JapaneseVowels split")
    rows = trace_rows(RunConfig(train=str(paths[0])))
    rho, p = spearmanr([r["merit"] for r in rows], [r["cv_accuracy"] for r in rows])
    ok = rho > 0 and p < 0.05
    record(name, ok, f"Spearman rho {rho:.3f} > 0, p {p:.2e} < 0.05 over {len(rows)} candidates")
    assert ok


# ---------------------------------------------------------------------------
# 7: oracle suites


def _dtw_suite() -> str:
    rng = np.random.default_rng(7)
    for _ in range(1000):
        m = int(rng.integers(1, 7))
        a = rng.integers(-5, 6, size=m).astype(float)
        b = rng.integers(-5, 6, size=m).astype(float)
        window = None if rng.random() < 0.5 else int(rng.integers(0, m))
        got = dtw_univariate(a, b, WarpingParams(window))
        assert got == brute_force_dtw(a, b, window), (a, b, window)
    return "DTW == path enumeration on 1000 pairs"


def _info_suite() -> str:
    rng = np.random.default_rng(8)
    for _ in range(300):
        n = int(rng.integers(2, 60))
        x = rng.integers(0, int(rng.integers(1, 5)), size=n).tolist()
        y = rng.integers(0, int(rng.integers(1, 6)), size=n).tolist()
        assert abs(entropy(x) - entropy_oracle(x)) <= 1e-9
        assert abs(mutual_information(x, y) - max(mi_oracle(x, y), 0.0)) <= 1e-9
        assert abs(ami(x, y) - adjusted_mutual_info_score(x, y, average_method="arithmetic")) <= 1e-9
    return "entropy/MI/AMI within 1e-9 on 300 pairs"


def _emi_suite() -> str:
    rng = np.random.default_rng(9)
    for _ in range(30):
        r, c = rng.integers(1, 5, size=2)
        n = int(rng.integers(2, 31))
        counts = np.bincount(rng.integers(0, r * c, size=n), minlength=r * c).reshape(r, c)
        counts = counts[counts.sum(axis=1) > 0][:, counts.sum(axis=0) > 0]
        emi = expected_mi(ContingencyTable(counts))
        assert abs(emi - emi_formula(counts)) <= 1e-9
        samples = permutation_mi(counts, 20_000, seed=int(rng.integers(1 << 30)))
        stderr = samples.std(ddof=1) / math.sqrt(samples.size)
        assert abs(samples.mean() - emi) <= 3 * stderr + 1e-12, counts
    return "E[MI] within 3 s.e. of permutation means on 30 tables (N <= 30)"


def _merit_suite() -> str:
    rng = np.random.default_rng(10)
    for _ in range(500):
        n = int(rng.integers(1, 12))
        model = random_model(rng, n)
        subset = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
        want = merit_reference(subset, model.cf, model.ff)
        assert abs(merit(subset, model.cf, model.ff) - want) <= 1e-12 * max(1.0, abs(want))
    return "merit within 1e-12 of an independent evaluation on 500 subsets"


def _greedy_suite() -> str:
    rng = np.random.default_rng(11)
    for _ in range(200):
        model = random_model(rng, int(rng.integers(2, 13)))
        step = msts_select(model).trace.steps[1]
        assert step.subset == exhaustive_best_merit(model, 2)[0]
    return "greedy pair step == exhaustive best pair on 200 models (n <= 12)"


@pytest.mark.parametrize("suite", [_dtw_suite, _info_suite, _emi_suite, _merit_suite, _greedy_suite])
def test_c7_oracle_suites(suite):
    name = f"C7 oracle suite {suite.__name__.strip('_').replace('_suite', '')}"
    start = time.perf_counter()
    try:
        detail = suite()
    except AssertionError as exc:
        record(name, False, f"mismatch {exc}")
        raise
    seconds = time.perf_counter() - start
    ok = seconds < 30
    record(name, ok, f"{detail}, {seconds:.1f}s < 30s")
    assert ok


# ---------------------------------------------------------------------------
# 8: determinism


def _comparable(report: dict) -> dict:
    return {
        name: {"subset": m["subset"], "trace": m["trace"], "test_accuracy": m["test_accuracy"]}
        for name, m in report["methods"].items()
    } | {"benchmark_accuracy": report["benchmark_accuracy"]}


def test_c8_determinism():
    name = "C8 determinism of full select runs"
    paths = require(name, find_split("BasicMotions"), "BasicMotions split")
    config = RunConfig(train=str(paths[0]), test=str(paths[1]), fold_seed=3)
    a, b = _comparable(select(config)), _comparable(select(config))
    ok = a == b
    record(name, ok, "identical subsets, traces and accuracies across two runs" if ok else "runs differ")
    assert ok


def _main() -> None:
    for test in (test_c1_basic_motions, test_c2_racket_sports, test_c3_ering, test_c4_cost_ordering,
                 test_c6_merit_accuracy_association, test_c8_determinism):
        try:
            test()
        except BaseException:  # noqa: BLE001 - the outcome is already recorded
            pass
    for dataset, files, threshold in (("Soybean", ("soybean-large.data", "soybean-large.csv"), 0.9),
                                      ("Mushroom", ("agaricus-lepiota.data", "mushroom.csv"), 0.7)):
        try:
            test_c5_merit_correlation(dataset, files, threshold)
        except BaseException:  # noqa: BLE001
            pass
    for suite in (_dtw_suite, _info_suite, _emi_suite, _merit_suite, _greedy_suite):
        try:
            test_c7_oracle_suites(suite)
        except BaseException:  # noqa: BLE001
            pass
    print("\n".join(summary_lines()))


def summary_lines() -> list[str]:
    return sorted(RESULTS, key=lambda line: line.split("] ", 1)[1])


if __name__ == "__main__":
    _main()
