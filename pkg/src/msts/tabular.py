"""Classic CFS merit versus classifier-output merit on categorical tables.

The classic score uses symmetrical uncertainty between raw attribute columns
and the class.  The classifier-output score replaces each attribute by the
cross-validated predictions of a one-attribute majority-vote rule and uses
adjusted mutual information, exactly as the time-series path does with 1NN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .classify import FoldAssignment, make_folds
from .dataset import TabularDataset
from .info import pearson, symmetrical_uncertainty
from .merit import CorrelationModel, build_correlation_model, merit

__all__ = [
    "MeritComparison",
    "single_attribute_predict",
    "original_model",
    "proposed_model",
    "original_merit",
    "proposed_merit",
    "sample_subsets",
    "compare_random_subsets",
]


@dataclass(frozen=True)
class MeritComparison:
    subsets: tuple[tuple[int, ...], ...]
    original_merit: tuple[float, ...]
    proposed_merit: tuple[float, ...]
    pearson_r: float

    def to_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "rows": [
                {"subset": list(s), "original_merit": o, "proposed_merit": p}
                for s, o, p in zip(self.subsets, self.original_merit, self.proposed_merit)
            ],
        }


def _majority(labels: np.ndarray, n_classes: int) -> int:
    # argmax returns the first maximum, i.e. the smallest class id on ties
    return int(np.argmax(np.bincount(labels, minlength=n_classes)))


def single_attribute_predict(tds: TabularDataset, attribute: int, folds: FoldAssignment) -> np.ndarray:
    """Out-of-fold predictions of a one-attribute majority-vote (1R-style) rule.

    Each attribute value predicts the majority class among training rows with
    that value; values unseen in the training fold predict the fold majority.
    Missing values are treated as a value of their own.
    """
    if not 0 <= attribute < tds.n_attributes:
        raise IndexError(f"attribute {attribute} out of range for {tds.n_attributes} attributes")
    column = tds.attributes[:, attribute]
    labels = tds.labels
    n_classes = int(labels.max()) + 1
    predicted = np.empty_like(labels)
    for fold in range(folds.k):
        test = folds.fold_of == fold
        if not test.any():
            continue
        train = ~test
        fallback = _majority(labels[train], n_classes)
        rule = {}
        for value in np.unique(column[train]):
            rule[int(value)] = _majority(labels[train & (column == value)], n_classes)
        predicted[test] = [rule.get(int(v), fallback) for v in column[test]]
    return predicted


def original_model(tds: TabularDataset) -> CorrelationModel:
    """Symmetrical uncertainty on raw columns."""
    n = tds.n_attributes
    cols = tds.attributes
    cf = np.array([symmetrical_uncertainty(cols[:, a], tds.labels) for a in range(n)])
    ff = np.eye(n)
    for i, j in combinations(range(n), 2):
        ff[i, j] = ff[j, i] = symmetrical_uncertainty(cols[:, i], cols[:, j])
    return CorrelationModel(cf, ff)


def proposed_model(tds: TabularDataset, folds: FoldAssignment, attributes: Sequence[int] | None = None) -> CorrelationModel:
    """AMI on single-attribute predictions (rows follow ``attributes`` order)."""
    attributes = range(tds.n_attributes) if attributes is None else attributes
    predicted = np.vstack([single_attribute_predict(tds, a, folds) for a in attributes])
    return build_correlation_model(predicted, tds.labels)


def original_merit(tds: TabularDataset, subset: Sequence[int]) -> float:
    subset = list(subset)
    if not subset:
        raise ValueError("merit of an empty subset is undefined")
    cols = tds.attributes
    cf = [symmetrical_uncertainty(cols[:, a], tds.labels) for a in subset]
    ff = np.eye(len(subset))
    for i, j in combinations(range(len(subset)), 2):
        ff[i, j] = ff[j, i] = symmetrical_uncertainty(cols[:, subset[i]], cols[:, subset[j]])
    return merit(range(len(subset)), cf, ff)


def proposed_merit(tds: TabularDataset, subset: Sequence[int], folds: FoldAssignment) -> float:
    subset = list(subset)
    if not subset:
        raise ValueError("merit of an empty subset is undefined")
    model = proposed_model(tds, folds, subset)
    return merit(range(len(subset)), model.cf, model.ff)


def sample_subsets(n: int, size: int, count: int, seed: int = 0) -> list[tuple[int, ...]]:
    """``count`` distinct sorted subsets of ``range(n)``, drawn with a seeded generator."""
    if not 1 <= size <= n:
        raise ValueError(f"subset size {size} out of range for {n} attributes")
    available = math.comb(n, size)
    if count > available:
        raise ValueError(f"cannot draw {count} distinct subsets; only {available} exist")
    rng = np.random.default_rng(seed)
    seen: set[tuple[int, ...]] = set()
    out = []
    while len(out) < count:
        s = tuple(sorted(int(i) for i in rng.choice(n, size=size, replace=False)))
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


def compare_random_subsets(
    tds: TabularDataset,
    subset_size: int = 5,
    count: int = 100,
    seed: int = 0,
    folds: FoldAssignment | None = None,
) -> MeritComparison:
    if count < 2:
        raise ValueError("need at least 2 subsets for a Pearson correlation")
    subsets = sample_subsets(tds.n_attributes, subset_size, count, seed)
    if folds is None:
        folds = make_folds(tds.labels, 10, 0)
    orig = original_model(tds)
    prop = proposed_model(tds, folds)
    o = tuple(merit(s, orig.cf, orig.ff) for s in subsets)
    p = tuple(merit(s, prop.cf, prop.ff) for s in subsets)
    return MeritComparison(tuple(subsets), o, p, pearson(o, p))
