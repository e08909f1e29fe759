"""Readers and containers for labelled multivariate time series and categorical tables.

The time-series reader understands the ``.ts`` text format used by the UEA/UCR
archive (equal-length series only).  The tabular reader handles plain,
unquoted CSV where every column is categorical and ``?`` marks a missing value.
"""

from __future__ import annotations

import gzip
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "MISSING",
    "DatasetFormatError",
    "SchemaMismatchError",
    "TimeSeriesDataset",
    "TabularDataset",
    "parse_ts",
    "serialize_ts",
    "read_ts",
    "parse_tabular",
    "read_tabular",
    "load_split",
    "read_split",
    "stratified_subsample",
    "project_features",
    "znormalize",
]

MISSING = -1


class DatasetFormatError(ValueError):
    """Raised when an input file violates its format."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaMismatchError(ValueError):
    pass


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """Equal-length labelled multivariate series.

    ``values`` has shape ``(n_instances, n_features, series_length)`` and
    ``labels`` holds integer ids into ``class_names``.
    """

    name: str
    values: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if values.ndim != 3:
            raise ValueError(f"values must be 3-D (instance, feature, time), got shape {values.shape}")
        if labels.shape != (values.shape[0],):
            raise ValueError("labels must have one entry per instance")
        if not np.all(np.isfinite(values)):
            raise ValueError("series values must be finite")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise ValueError("label id out of range of class_names")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def series_length(self) -> int:
        return self.values.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesDataset):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )

    def __repr__(self):
        return (
            f"TimeSeriesDataset(name={self.name!r}, n_instances={self.n_instances}, "
            f"n_features={self.n_features}, series_length={self.series_length}, "
            f"n_classes={self.n_classes})"
        )


@dataclass(frozen=True, eq=False)
class TabularDataset:
    """Categorical table; missing cells carry the id ``MISSING``."""

    attributes: np.ndarray
    labels: np.ndarray
    attribute_names: tuple[str, ...]
    attribute_value_names: tuple[tuple[str, ...], ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        attributes = np.array(self.attributes, dtype=np.int64)
        labels = np.array(self.labels, dtype=np.int64)
        if attributes.ndim != 2 or attributes.shape[0] != labels.shape[0]:
            raise ValueError("attributes must be (n_instances, n_attributes) aligned with labels")
        object.__setattr__(self, "attributes", _frozen(attributes))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n_instances(self) -> int:
        return self.attributes.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.attributes.shape[1]


# ---------------------------------------------------------------------------
# .ts format

_FLAG_DIRECTIVES = {"univariate", "equallength", "timestamps", "missing"}


def _parse_bool(value: str, directive: str, line: int) -> bool:
    v = value.strip().lower()
    if v == "true":
        return True
    if v == "false":
        return False
    raise DatasetFormatError(f"@{directive} expects true/false, got {value!r}", line)


def parse_ts(text: str, name: str | None = None, normalize: bool = False) -> TimeSeriesDataset:
    """Parse the contents of a ``.ts`` file.

    Channels are separated by ``:`` and the class label is the last ``:`` token
    of each data line.  Variable-length, timestamped and unlabelled problems
    are rejected.
    """
    header: dict[str, object] = {}
    class_names: list[str] | None = None
    rows: list[list[list[float]]] = []
    labels: list[str] = []
    in_data = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not in_data:
            if not line.startswith("@"):
                raise DatasetFormatError("expected a header directive before @data", lineno)
            directive, _, rest = line[1:].partition(" ")
            directive = directive.lower()
            rest = rest.strip()
            if directive == "data":
                in_data = True
            elif directive == "problemname":
                header["problemname"] = rest
            elif directive in _FLAG_DIRECTIVES:
                header[directive] = _parse_bool(rest, directive, lineno)
            elif directive in ("dimensions", "serieslength"):
                try:
                    header[directive] = int(rest)
                except ValueError:
                    raise DatasetFormatError(f"@{directive} expects an integer, got {rest!r}", lineno) from None
                if header[directive] < 1:
                    raise DatasetFormatError(f"@{directive} must be positive", lineno)
            elif directive == "classlabel":
                tokens = rest.split()
                if not tokens:
                    raise DatasetFormatError("@classLabel needs true/false", lineno)
                if not _parse_bool(tokens[0], directive, lineno):
                    raise DatasetFormatError("unlabelled problems (@classLabel false) are not supported", lineno)
                if len(tokens) < 2:
                    raise DatasetFormatError("@classLabel true must list the class labels", lineno)
                class_names = tokens[1:]
                if len(set(class_names)) != len(class_names):
                    raise DatasetFormatError("duplicate class label in @classLabel", lineno)
            elif directive in ("targetlabel",):
                raise DatasetFormatError("regression problems (@targetLabel) are not supported", lineno)
            else:
                raise DatasetFormatError(f"unknown header directive @{directive}", lineno)
            if header.get("timestamps"):
                raise DatasetFormatError("timestamped series are not supported", lineno)
            if header.get("equallength") is False:
                raise DatasetFormatError("variable-length series are not supported", lineno)
            continue

        if class_names is None:
            raise DatasetFormatError("@classLabel must precede @data", lineno)
        tokens = line.split(":")
        if len(tokens) < 2:
            raise DatasetFormatError("data line needs at least one channel and a class label", lineno)
        label = tokens[-1].strip()
        if label not in class_names:
            raise DatasetFormatError(f"unknown class label {label!r}", lineno)
        channels = []
        for channel in tokens[:-1]:
            try:
                samples = [float(s) for s in channel.split(",")]
            except ValueError:
                raise DatasetFormatError("non-numeric sample", lineno) from None
            if not all(math.isfinite(s) for s in samples):
                raise DatasetFormatError("missing or non-finite sample", lineno)
            channels.append(samples)
        _check_line_shape(channels, header, rows, lineno)
        rows.append(channels)
        labels.append(label)

    if not in_data:
        raise DatasetFormatError("no @data section")
    if not rows:
        raise DatasetFormatError("empty data section")

    index = {c: i for i, c in enumerate(class_names)}
    ds = TimeSeriesDataset(
        name=name or str(header.get("problemname", "")),
        values=np.asarray(rows, dtype=np.float64),
        labels=np.array([index[c] for c in labels], dtype=np.int64),
        class_names=tuple(class_names),
    )
    return znormalize(ds) if normalize else ds


def _check_line_shape(channels, header, rows, lineno):
    n_dims = header.get("dimensions")
    if n_dims is None:
        n_dims = 1 if header.get("univariate") else (len(rows[0]) if rows else len(channels))
    if len(channels) != n_dims:
        raise DatasetFormatError(f"expected {n_dims} channels, found {len(channels)}", lineno)
    lengths = {len(c) for c in channels}
    expected = header.get("serieslength", len(rows[0][0]) if rows else None)
    if len(lengths) != 1 or (expected is not None and lengths != {expected}):
        raise DatasetFormatError("ragged channel: series lengths differ", lineno)


def serialize_ts(ds: TimeSeriesDataset) -> str:
    """Render a dataset as ``.ts`` text; ``parse_ts`` reads it back exactly."""
    lines = [
        f"@problemName {ds.name or 'unnamed'}",
        "@timestamps false",
        "@missing false",
        f"@univariate {'true' if ds.n_features == 1 else 'false'}",
        f"@dimensions {ds.n_features}",
        "@equalLength true",
        f"@seriesLength {ds.series_length}",
        "@classLabel true " + " ".join(ds.class_names),
        "@data",
    ]
    for inst, label in zip(ds.values, ds.labels):
        channels = [",".join(repr(float(v)) for v in channel) for channel in inst]
        lines.append(":".join(channels) + ":" + ds.class_names[label])
    return "\n".join(lines) + "\n"


def _read_text(path: str | Path) -> str:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            return fh.read()
    return path.read_text(encoding="utf-8")


def read_ts(path: str | Path, normalize: bool = False) -> TimeSeriesDataset:
    """Read a ``.ts`` (or gzipped ``.ts.gz``) file from disk."""
    path = Path(path)
    return _named(parse_ts(_read_text(path), normalize=normalize), path)


def _named(ds: TimeSeriesDataset, path: Path) -> TimeSeriesDataset:
    if ds.name:
        return ds
    stem = path.name.split(".")[0]
    return TimeSeriesDataset(stem, ds.values, ds.labels, ds.class_names)


def load_split(train_text: str, test_text: str, normalize: bool = False) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    train = parse_ts(train_text, normalize=normalize)
    test = parse_ts(test_text, normalize=normalize)
    check_schema(train, test)
    return train, test


def read_split(train_path, test_path, normalize: bool = False) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    train = read_ts(train_path, normalize=normalize)
    test = read_ts(test_path, normalize=normalize)
    check_schema(train, test)
    return train, test


def check_schema(train: TimeSeriesDataset, test: TimeSeriesDataset) -> None:
    if train.n_features != test.n_features:
        raise SchemaMismatchError(f"feature count differs: train {train.n_features}, test {test.n_features}")
    if train.series_length != test.series_length:
        raise SchemaMismatchError(f"series length differs: train {train.series_length}, test {test.series_length}")
    if train.class_names != test.class_names:
        raise SchemaMismatchError(f"class labels differ: train {train.class_names}, test {test.class_names}")


def znormalize(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """Z-normalise every channel of every instance; constant channels become zero."""
    mean = ds.values.mean(axis=2, keepdims=True)
    std = ds.values.std(axis=2, keepdims=True)
    std = np.where(std > 0, std, 1.0)
    return TimeSeriesDataset(ds.name, (ds.values - mean) / std, ds.labels, ds.class_names)


def stratified_subsample(ds: TimeSeriesDataset, fraction: float, seed: int = 0) -> TimeSeriesDataset:
    """Keep ``round(fraction * count)`` (at least one) instances of every class.

    Selection is seeded and the original instance order is preserved.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return ds
    rng = np.random.default_rng(seed)
    keep = []
    for cls in np.unique(ds.labels):
        members = np.flatnonzero(ds.labels == cls)
        n_keep = max(1, math.floor(fraction * members.size + 0.5))
        keep.append(rng.permutation(members)[:n_keep])
    idx = np.sort(np.concatenate(keep))
    return TimeSeriesDataset(ds.name, ds.values[idx], ds.labels[idx], ds.class_names)


def project_features(ds: TimeSeriesDataset, subset: Sequence[int]) -> TimeSeriesDataset:
    """Keep only the channels in ``subset``, in the order given."""
    subset = [int(f) for f in subset]
    if not subset:
        raise ValueError("feature subset is empty")
    if len(set(subset)) != len(subset):
        raise ValueError(f"duplicate feature index in {subset}")
    bad = [f for f in subset if not 0 <= f < ds.n_features]
    if bad:
        raise IndexError(f"feature index {bad[0]} out of range for {ds.n_features} features")
    return TimeSeriesDataset(ds.name, ds.values[:, subset, :], ds.labels, ds.class_names)


# ---------------------------------------------------------------------------
# categorical CSV


def parse_tabular(text: str, label_column: int, header: bool = False) -> TabularDataset:
    """Parse comma-separated categorical rows.

    Value ids are assigned per column in order of first appearance; ``?``
    becomes ``MISSING``.
    """
    rows = [[cell.strip() for cell in line.split(",")] for line in text.splitlines() if line.strip()]
    names = None
    if header and rows:
        names, rows = rows[0], rows[1:]
    if not rows:
        raise DatasetFormatError("empty tabular input")
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise DatasetFormatError(f"ragged row: expected {width} columns, found {len(row)}", lineno)
    if not -width <= label_column < width:
        raise IndexError(f"label column {label_column} out of range for {width} columns")
    label_column %= width
    if width < 2:
        raise DatasetFormatError("need at least one attribute column besides the label")

    attr_cols = [c for c in range(width) if c != label_column]
    value_names: list[list[str]] = [[] for _ in attr_cols]
    value_ids: list[dict[str, int]] = [{} for _ in attr_cols]
    attributes = np.empty((len(rows), len(attr_cols)), dtype=np.int64)
    class_ids: dict[str, int] = {}
    labels = np.empty(len(rows), dtype=np.int64)
    for r, row in enumerate(rows):
        cls = row[label_column]
        if cls == "?":
            raise DatasetFormatError("missing class label", r + 1)
        labels[r] = class_ids.setdefault(cls, len(class_ids))
        for a, col in enumerate(attr_cols):
            cell = row[col]
            if cell == "?":
                attributes[r, a] = MISSING
                continue
            ids = value_ids[a]
            if cell not in ids:
                ids[cell] = len(ids)
                value_names[a].append(cell)
            attributes[r, a] = ids[cell]

    if names is None:
        attribute_names = tuple(f"a{c}" for c in attr_cols)
    else:
        attribute_names = tuple(names[c] for c in attr_cols)
    return TabularDataset(
        attributes=attributes,
        labels=labels,
        attribute_names=attribute_names,
        attribute_value_names=tuple(tuple(v) for v in value_names),
        class_names=tuple(class_ids),
    )


def read_tabular(path: str | Path, label_column: int, header: bool = False) -> TabularDataset:
    return parse_tabular(_read_text(path), label_column, header=header)
