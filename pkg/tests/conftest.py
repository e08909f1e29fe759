from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from msts.dataset import TimeSeriesDataset

DATA = Path(__file__).parent / "data"


def data_file(name: str) -> Path:
    return DATA / name


def make_dataset(values, labels, n_classes=None, name="toy") -> TimeSeriesDataset:
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = int(labels.max()) + 1 if n_classes is None else n_classes
    return TimeSeriesDataset(name, np.asarray(values, dtype=np.float64), labels, tuple(f"c{i}" for i in range(n_classes)))


@pytest.fixture
def toy() -> TimeSeriesDataset:
    """Twelve instances, three features, two classes; feature 0 separates the classes."""
    rng = np.random.default_rng(7)
    labels = np.array([0, 1] * 6)
    values = rng.normal(size=(12, 3, 8))
    values[:, 0, :] += 4.0 * labels[:, None]
    return make_dataset(values, labels)


@pytest.fixture(scope="session")
def basic_motions_paths() -> tuple[Path, Path]:
    return data_file("BasicMotions_TRAIN.ts.gz"), data_file("BasicMotions_TEST.ts.gz")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get(f"{__package__}.test_acceptance") if __package__ else None
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
