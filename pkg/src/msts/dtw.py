"""Dynamic time warping kernels and the per-feature distance tensor cache.

All costs are accumulated squared differences (no square root).  A subset of
features is scored by summing the per-feature matrices, which gives
independent-warping semantics; exact dependent warping is available through
:func:`dtw_dependent` for uncached evaluation.
"""

from __future__ import annotations

import os
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .dataset import TimeSeriesDataset, check_schema

__all__ = [
    "WarpingParams",
    "DistanceTensor",
    "CacheError",
    "FingerprintMismatchError",
    "dtw_univariate",
    "dtw_dependent",
    "dtw_independent",
    "compute_distance_tensor",
    "subset_matrix",
    "subset_distance",
    "cross_distance",
    "fingerprint",
    "save_tensor",
    "load_tensor",
]

MAGIC = b"MSTSDT01"
_HEADER = struct.Struct("<8sQII")

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)


class CacheError(IOError):
    pass


class FingerprintMismatchError(CacheError):
    pass


@dataclass(frozen=True)
class WarpingParams:
    """``window`` is a Sakoe-Chiba band half-width in samples; ``None`` means unconstrained."""

    window: int | None = None

    def __post_init__(self):
        if self.window is not None and self.window < 0:
            raise ValueError(f"warping window must be >= 0, got {self.window}")

    def check_length(self, series_length: int) -> None:
        if self.window is not None and self.window >= series_length:
            raise ValueError(f"warping window {self.window} must be < series length {series_length}")

    @property
    def band(self) -> int:
        return -1 if self.window is None else int(self.window)


@numba.njit(cache=True, nogil=True)
def _dp(cost, band):
    n, m = cost.shape
    inf = np.inf
    acc = np.full((n, m), inf)
    for i in range(n):
        lo = 0
        hi = m
        if band >= 0:
            lo = max(0, i - band)
            hi = min(m, i + band + 1)
        for j in range(lo, hi):
            c = cost[i, j]
            if i == 0 and j == 0:
                acc[i, j] = c
                continue
            best = inf
            if i > 0 and j > 0 and acc[i - 1, j - 1] < best:
                best = acc[i - 1, j - 1]
            if i > 0 and acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if j > 0 and acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = c + best
    return acc[n - 1, m - 1]


@numba.njit(cache=True, nogil=True)
def _dtw_1d(a, b, band):
    n = a.shape[0]
    m = b.shape[0]
    prev = np.full(m, np.inf)
    curr = np.full(m, np.inf)
    for i in range(n):
        lo = 0
        hi = m
        if band >= 0:
            lo = max(0, i - band)
            hi = min(m, i + band + 1)
        for j in range(m):
            curr[j] = np.inf
        for j in range(lo, hi):
            d = a[i] - b[j]
            c = d * d
            if i == 0 and j == 0:
                curr[j] = c
                continue
            best = np.inf
            if i > 0 and j > 0 and prev[j - 1] < best:
                best = prev[j - 1]
            if i > 0 and prev[j] < best:
                best = prev[j]
            if j > 0 and curr[j - 1] < best:
                best = curr[j - 1]
            curr[j] = c + best
        prev, curr = curr, prev
    return prev[m - 1]


@numba.njit(cache=True, nogil=True)
def _pairwise_1d(x, band):
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = _dtw_1d(x[i], x[j], band)
            out[i, j] = d
            out[j, i] = d
    return out


@numba.njit(cache=True, nogil=True)
def _cross_1d(test, train, band):
    out = np.empty((test.shape[0], train.shape[0]))
    for i in range(test.shape[0]):
        for j in range(train.shape[0]):
            out[i, j] = _dtw_1d(test[i], train[j], band)
    return out


def _as_series(x, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional")
    if arr.size == 0:
        raise ValueError(f"{what} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr


def _as_channels(x, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ValueError(f"{what} must be a non-empty (channels, time) array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr


def _finish(cost: float) -> float:
    if not np.isfinite(cost):
        raise ValueError("warping window too narrow for the series lengths")
    return float(cost)


def dtw_univariate(a, b, params: WarpingParams = WarpingParams()) -> float:
    """Accumulated squared-difference DTW cost between two 1-D series."""
    a = _as_series(a, "first series")
    b = _as_series(b, "second series")
    return _finish(_dtw_1d(a, b, params.band))


def dtw_dependent(A, B, params: WarpingParams = WarpingParams()) -> float:
    """One warping path shared by all channels; pointwise cost is the squared
    Euclidean distance between the aligned channel vectors."""
    A = _as_channels(A, "first series")
    B = _as_channels(B, "second series")
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"channel count mismatch: {A.shape[0]} vs {B.shape[0]}")
    diff = A[:, :, None] - B[:, None, :]
    cost = np.einsum("cij,cij->ij", diff, diff)
    return _finish(_dp(cost, params.band))


def dtw_independent(A, B, params: WarpingParams = WarpingParams()) -> float:
    """Sum of per-channel univariate DTW costs."""
    A = _as_channels(A, "first series")
    B = _as_channels(B, "second series")
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"channel count mismatch: {A.shape[0]} vs {B.shape[0]}")
    return float(sum(_finish(_dtw_1d(a, b, params.band)) for a, b in zip(A, B)))


# ---------------------------------------------------------------------------
# distance tensor


@dataclass(frozen=True, eq=False)
class DistanceTensor:
    """Per-feature train-by-train DTW matrices, shape ``(n_features, n, n)``."""

    distances: np.ndarray
    fingerprint: int

    def __post_init__(self):
        d = np.ascontiguousarray(self.distances, dtype=np.float64)
        if d.ndim != 3 or d.shape[1] != d.shape[2]:
            raise ValueError(f"distance tensor must be (features, n, n), got {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

    @property
    def n_features(self) -> int:
        return self.distances.shape[0]

    @property
    def n_instances(self) -> int:
        return self.distances.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DistanceTensor):
            return NotImplemented
        return self.fingerprint == other.fingerprint and np.array_equal(self.distances, other.distances)


@numba.njit(cache=True)
def _fnv1a(data, h):
    prime = np.uint64(0x100000001B3)
    for byte in data:
        h = (h ^ np.uint64(byte)) * prime
    return h


def fingerprint(ds: TimeSeriesDataset, params: WarpingParams = WarpingParams()) -> int:
    """64-bit FNV-1a over the values, labels, shape and warping window."""
    h = _FNV_OFFSET
    shape = np.array(ds.values.shape + (params.band,), dtype="<i8")
    for block in (
        shape,
        np.ascontiguousarray(ds.values, dtype="<f8"),
        np.ascontiguousarray(ds.labels, dtype="<i8"),
    ):
        h = _fnv1a(block.reshape(-1).view(np.uint8), np.uint64(h))
    return int(h)


def compute_distance_tensor(
    ds: TimeSeriesDataset, params: WarpingParams = WarpingParams(), n_jobs: int = 1
) -> DistanceTensor:
    """Pairwise univariate DTW for every feature of ``ds``.

    Features are independent work items; ``n_jobs > 1`` spreads them over
    threads (the kernels release the GIL).  The result does not depend on
    ``n_jobs``.
    """
    params.check_length(ds.series_length)
    features = [np.ascontiguousarray(ds.values[:, f, :]) for f in range(ds.n_features)]
    band = params.band
    if n_jobs == 1 or ds.n_features == 1:
        slices = [_pairwise_1d(x, band) for x in features]
    else:
        workers = os.cpu_count() if n_jobs < 1 else n_jobs
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slices = list(pool.map(lambda x: _pairwise_1d(x, band), features))
    return DistanceTensor(np.stack(slices), fingerprint(ds, params))


def _check_subset(subset: Sequence[int], n_features: int) -> list[int]:
    subset = [int(f) for f in subset]
    if not subset:
        raise ValueError("feature subset is empty")
    for f in subset:
        if not 0 <= f < n_features:
            raise IndexError(f"feature index {f} out of range for {n_features} features")
    return subset


def subset_matrix(t: DistanceTensor, subset: Sequence[int]) -> np.ndarray:
    """Summed distance matrix for ``subset`` (repeated indices count repeatedly)."""
    subset = _check_subset(subset, t.n_features)
    if len(subset) == 1:
        return t.distances[subset[0]]
    return t.distances[subset].sum(axis=0)


def subset_distance(t: DistanceTensor, subset: Sequence[int], i: int, j: int) -> float:
    subset = _check_subset(subset, t.n_features)
    n = t.n_instances
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"instance index out of range for {n} instances")
    return float(sum(t.distances[f, i, j] for f in subset))


def cross_distance(
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
    subset: Sequence[int],
    params: WarpingParams = WarpingParams(),
) -> np.ndarray:
    """Test-by-train matrix of summed per-feature DTW costs."""
    check_schema(train, test)
    subset = _check_subset(subset, train.n_features)
    params.check_length(train.series_length)
    out = np.zeros((test.n_instances, train.n_instances))
    for f in subset:
        out += _cross_1d(
            np.ascontiguousarray(test.values[:, f, :]),
            np.ascontiguousarray(train.values[:, f, :]),
            params.band,
        )
    return out


# ---------------------------------------------------------------------------
# cache file


def save_tensor(t: DistanceTensor, path: str | Path) -> None:
    """Write atomically: a temp file in the same directory is renamed into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(MAGIC, t.fingerprint, t.n_features, t.n_instances)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(t.distances, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_tensor(path: str | Path, expected_fingerprint: int | None = None) -> DistanceTensor:
    """Read a cache file, rejecting truncated files and foreign fingerprints."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CacheError(f"truncated cache {path}: header incomplete")
    magic, fp, n_features, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CacheError(f"{path} is not a distance cache (bad magic {magic!r})")
    expected_size = _HEADER.size + 8 * n_features * n * n
    if len(data) < expected_size:
        raise CacheError(f"truncated cache {path}: {len(data)} of {expected_size} bytes")
    if len(data) > expected_size:
        raise CacheError(f"corrupt cache {path}: {len(data) - expected_size} trailing bytes")
    if expected_fingerprint is not None and fp != expected_fingerprint:
        raise FingerprintMismatchError(
            f"cache {path} was built for different data or warping parameters "
            f"(fingerprint {fp:016x}, expected {expected_fingerprint:016x})"
        )
    distances = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n_features, n, n)
    return DistanceTensor(distances.astype(np.float64), fp)
