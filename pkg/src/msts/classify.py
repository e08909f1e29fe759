"""1-nearest-neighbour classification over DTW distances with stratified k-fold CV."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import TimeSeriesDataset, check_schema, project_features
from .dtw import (
    DistanceTensor,
    WarpingParams,
    cross_distance,
    dtw_dependent,
    subset_matrix,
)

__all__ = [
    "FoldAssignment",
    "PredictionMatrix",
    "make_folds",
    "effective_k",
    "nn_predict",
    "cv_predict_matrix",
    "cv_predict_subset",
    "cv_accuracy",
    "single_feature_predictions",
    "test_predictions",
    "test_accuracy",
    "MODES",
]

log = logging.getLogger(__name__)

MODES = ("lookup-sum", "dependent")


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    k: int
    seed: int

    def __post_init__(self):
        fold_of = np.array(self.fold_of, dtype=np.int64)
        fold_of.setflags(write=False)
        object.__setattr__(self, "fold_of", fold_of)

    def __eq__(self, other):
        if not isinstance(other, FoldAssignment):
            return NotImplemented
        return self.k == other.k and self.seed == other.seed and np.array_equal(self.fold_of, other.fold_of)


@dataclass(frozen=True, eq=False)
class PredictionMatrix:
    """Cross-validated class predictions, one row per feature."""

    predicted: np.ndarray
    folds: FoldAssignment

    @property
    def n_features(self) -> int:
        return self.predicted.shape[0]


def make_folds(labels, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Stratified fold assignment.

    Members of each class are shuffled with a seeded generator and dealt
    round-robin; the dealing position carries over from one class to the next
    so that every fold is populated and small classes land in distinct folds.
    """
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise ValueError(f"need at least 2 folds, got k={k}")
    if k > n:
        raise ValueError(f"k={k} folds exceeds the {n} available instances")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    pos = 0
    for cls in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == cls))
        fold_of[members] = (pos + np.arange(members.size)) % k
        pos += members.size
    return FoldAssignment(fold_of, k, seed)


def effective_k(labels, k: int = 10) -> int:
    """Shrink ``k`` to the smallest class size (never below 2)."""
    smallest = int(np.bincount(np.unique(labels, return_inverse=True)[1].reshape(-1)).min())
    if smallest < k:
        reduced = max(2, smallest)
        log.warning("smallest class has %d members; using %d folds instead of %d", smallest, reduced, k)
        return reduced
    return k


def nn_predict(dist: np.ndarray, train_labels: np.ndarray) -> np.ndarray:
    """Label of the nearest column for every row; ties go to the smallest column index."""
    return np.asarray(train_labels)[np.argmin(dist, axis=1)]


def cv_predict_matrix(dist: np.ndarray, labels, folds: FoldAssignment) -> np.ndarray:
    """Out-of-fold 1NN predictions from a square distance matrix."""
    labels = np.asarray(labels)
    fold_of = folds.fold_of
    if dist.shape != (labels.size, labels.size) or fold_of.size != labels.size:
        raise ValueError("distance matrix, labels and folds disagree on the number of instances")
    same_fold = fold_of[:, None] == fold_of[None, :]
    if np.any(same_fold.all(axis=1)):
        raise ValueError("a fold leaves no training instances")
    masked = np.where(same_fold, np.inf, dist)
    return nn_predict(masked, labels)


def cv_predict_subset(t: DistanceTensor, labels, subset: Sequence[int], folds: FoldAssignment) -> np.ndarray:
    return cv_predict_matrix(subset_matrix(t, subset), labels, folds)


def cv_accuracy(t: DistanceTensor, labels, subset: Sequence[int], folds: FoldAssignment) -> float:
    labels = np.asarray(labels)
    return float(np.mean(cv_predict_subset(t, labels, subset, folds) == labels))


def single_feature_predictions(t: DistanceTensor, labels, folds: FoldAssignment) -> PredictionMatrix:
    rows = [cv_predict_subset(t, labels, [f], folds) for f in range(t.n_features)]
    return PredictionMatrix(np.vstack(rows), folds)


def test_predictions(
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
    subset: Sequence[int],
    params: WarpingParams = WarpingParams(),
    mode: str = "lookup-sum",
) -> np.ndarray:
    """1NN predictions for the test set trained on ``train`` using ``subset``."""
    check_schema(train, test)
    if mode == "lookup-sum":
        dist = cross_distance(train, test, subset, params)
    elif mode == "dependent":
        params.check_length(train.series_length)
        tr = project_features(train, subset).values
        te = project_features(test, subset).values
        dist = np.array([[dtw_dependent(a, b, params) for b in tr] for a in te])
    else:
        raise ValueError(f"unknown classifier mode {mode!r}; expected one of {MODES}")
    return nn_predict(dist, train.labels)


def test_accuracy(
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
    subset: Sequence[int],
    params: WarpingParams = WarpingParams(),
    mode: str = "lookup-sum",
) -> float:
    return float(np.mean(test_predictions(train, test, subset, params, mode) == test.labels))


# keep pytest from collecting the public test_* helpers when imported into test modules
test_predictions.__test__ = False
test_accuracy.__test__ = False
