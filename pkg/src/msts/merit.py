"""Merit scoring of feature subsets and greedy forward selection.

The merit of a size-``k`` subset is

    k * mean(cf) / sqrt(k + k * (k - 1) * mean(ff))

with ``cf`` the feature-class correlations of its members and ``ff`` the
feature-feature correlations over its distinct pairs.  Correlations here are
adjusted mutual information between cross-validated single-feature
predictions (and the class labels).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .classify import PredictionMatrix
from .info import ami_matrix

__all__ = [
    "CorrelationModel",
    "SelectionStep",
    "SelectionTrace",
    "SelectionResult",
    "merit",
    "build_correlation_model",
    "forward_select",
    "msts_select",
    "wrapper_select",
    "exhaustive_best_merit",
    "EXHAUSTIVE_LIMIT",
]

EXHAUSTIVE_LIMIT = 20

Subset = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    cf: np.ndarray
    ff: np.ndarray

    def __post_init__(self):
        cf = np.array(self.cf, dtype=np.float64)
        ff = np.array(self.ff, dtype=np.float64)
        if cf.ndim != 1 or ff.shape != (cf.size, cf.size):
            raise ValueError("cf must be (n,) and ff must be (n, n)")
        if not np.allclose(ff, ff.T, rtol=0, atol=1e-12):
            raise ValueError("feature-feature matrix must be symmetric")
        cf.setflags(write=False)
        ff.setflags(write=False)
        object.__setattr__(self, "cf", cf)
        object.__setattr__(self, "ff", ff)

    @property
    def n_features(self) -> int:
        return self.cf.size


def _unit(v: float, clamp: bool) -> float:
    return min(max(v, 0.0), 1.0) if clamp else v


def merit(subset: Sequence[int], cf, ff, clamp: bool = True) -> float:
    subset = [int(f) for f in subset]
    k = len(subset)
    if k == 0:
        raise ValueError("merit of an empty subset is undefined")
    mean_cf = sum(_unit(float(cf[f]), clamp) for f in subset) / k
    if k == 1:
        return mean_cf
    ff = np.asarray(ff)
    pair_sum = 0.0
    for a in range(k):
        row = ff[subset[a]]
        for b in range(a + 1, k):
            pair_sum += _unit(float(row[subset[b]]), clamp)
    mean_ff = pair_sum / (k * (k - 1) / 2)
    radicand = k + k * (k - 1) * mean_ff
    if radicand <= 0:
        raise ValueError(f"non-positive merit denominator {radicand}; clamp correlations first")
    return k * mean_cf / math.sqrt(radicand)


def build_correlation_model(pm: PredictionMatrix | np.ndarray, labels) -> CorrelationModel:
    """AMI of every prediction row against the labels and against every other row.

    Negative (chance-level) scores are clamped to zero and the diagonal is one.
    """
    predicted = pm.predicted if isinstance(pm, PredictionMatrix) else np.asarray(pm)
    labels = np.asarray(labels)
    if predicted.ndim != 2 or predicted.shape[1] != labels.size:
        raise ValueError("prediction matrix must be (n_features, n_instances) aligned with labels")
    cf, ff = ami_matrix(predicted, labels)
    np.fill_diagonal(ff, 1.0)
    return CorrelationModel(np.clip(cf, 0.0, 1.0), np.clip(ff, 0.0, 1.0))


@dataclass(frozen=True)
class SelectionStep:
    size: int
    n_candidates: int
    subset: Subset
    score: float
    accepted: bool
    candidates: tuple[tuple[Subset, float], ...] = field(default=(), repr=False, compare=True)

    def to_dict(self, with_candidates: bool = False) -> dict:
        out = {
            "size": self.size,
            "n_candidates": self.n_candidates,
            "subset": list(self.subset),
            "score": self.score,
            "accepted": self.accepted,
        }
        if with_candidates:
            out["candidates"] = [{"subset": list(s), "score": v} for s, v in self.candidates]
        return out


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple[SelectionStep, ...]
    stop_reason: str

    def to_dict(self, with_candidates: bool = False) -> dict:
        return {
            "steps": [s.to_dict(with_candidates) for s in self.steps],
            "stop_reason": self.stop_reason,
        }


@dataclass(frozen=True)
class SelectionResult:
    method: str
    subset: Subset
    trace: SelectionTrace
    cpu_time_seconds: float
    test_accuracy: float | None = None

    def to_dict(self, with_candidates: bool = False) -> dict:
        return {
            "method": self.method,
            "subset": list(self.subset),
            "trace": self.trace.to_dict(with_candidates),
            "cpu_time_seconds": self.cpu_time_seconds,
            "test_accuracy": self.test_accuracy,
        }


def _best(scored: list[tuple[Subset, float]]) -> tuple[Subset, float]:
    # highest score; ties go to the lexicographically smallest subset
    return min(scored, key=lambda item: (-item[1], item[0]))


def forward_select(score: Callable[[Subset], float], n_features: int) -> tuple[Subset, SelectionTrace]:
    """Sequential forward selection seeded by an exhaustive pair search.

    The baseline is the best single feature.  All pairs are scored next, then
    the incumbent grows one feature at a time while the best score strictly
    improves on the previous step.
    """
    if n_features < 2:
        raise ValueError(f"forward selection needs >= 2 features, got {n_features}")

    singles = [((f,), float(score((f,)))) for f in range(n_features)]
    best_subset, best_score = _best(singles)
    steps = [SelectionStep(1, n_features, best_subset, best_score, True, tuple(singles))]

    candidates = [(s, float(score(s))) for s in combinations(range(n_features), 2)]
    while True:
        subset, value = _best(candidates)
        size = len(subset)
        improved = value - best_score > 0
        steps.append(SelectionStep(size, len(candidates), subset, value, improved, tuple(candidates)))
        if not improved:
            reason = "no pair beats best single" if size == 2 else "no improvement"
            break
        best_subset, best_score = subset, value
        if size == n_features:
            reason = "all features selected"
            break
        chosen = set(subset)
        extensions = [tuple(sorted(chosen | {f})) for f in range(n_features) if f not in chosen]
        candidates = [(s, float(score(s))) for s in extensions]
    return best_subset, SelectionTrace(tuple(steps), reason)


def msts_select(model: CorrelationModel) -> SelectionResult:
    """Greedy forward search on merit computed from a correlation model."""
    start = time.process_time()
    subset, trace = forward_select(lambda s: merit(s, model.cf, model.ff), model.n_features)
    return SelectionResult("msts", subset, trace, time.process_time() - start)


def wrapper_select(accuracy_oracle: Callable[[Subset], float], n_features: int) -> SelectionResult:
    """The same search scored by cross-validated accuracy."""
    start = time.process_time()
    subset, trace = forward_select(accuracy_oracle, n_features)
    return SelectionResult("wrapper", subset, trace, time.process_time() - start)


def exhaustive_best_merit(model: CorrelationModel, k: int) -> tuple[Subset, float]:
    n = model.n_features
    if n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive search limited to {EXHAUSTIVE_LIMIT} features, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"subset size {k} out of range for {n} features")
    best: Subset | None = None
    best_score = -math.inf
    for s in combinations(range(n), k):
        value = merit(s, model.cf, model.ff)
        if value > best_score:
            best, best_score = s, value
    return best, best_score
