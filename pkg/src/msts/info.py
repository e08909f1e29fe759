"""Information-theoretic scores over discrete label vectors (natural log, nats)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "ContingencyTable",
    "contingency",
    "entropy",
    "joint_entropy",
    "mutual_information",
    "expected_mi",
    "ami",
    "ami_matrix",
    "symmetrical_uncertainty",
    "pearson",
]

_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValueError("contingency table must be two-dimensional")
        if np.any(counts < 0):
            raise ValueError("contingency counts must be non-negative")
        if counts.sum() == 0:
            raise ValueError("degenerate contingency table (N = 0)")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def identical_partitions(self) -> bool:
        """True when every occupied row and column holds a single non-zero cell."""
        nz = self.counts > 0
        rows = nz.sum(axis=1)
        cols = nz.sum(axis=0)
        return bool(np.all(rows[rows > 0] == 1) and np.all(cols[cols > 0] == 1))


@numba.njit(cache=True)
def _remap(x, upper):
    lookup = np.full(upper + 1, -1, dtype=np.int64)
    out = np.empty(x.size, dtype=np.int64)
    k = 0
    for i in range(x.size):
        lookup[x[i]] = 0
    for v in range(upper + 1):
        if lookup[v] == 0:
            lookup[v] = k
            k += 1
        else:
            lookup[v] = -1
    for i in range(x.size):
        out[i] = lookup[x[i]]
    return out, k


@numba.njit(cache=True)
def _remap_rows(rows, upper):
    codes = np.empty_like(rows)
    ks = np.empty(rows.shape[0], dtype=np.int64)
    for r in range(rows.shape[0]):
        codes[r], ks[r] = _remap(rows[r], upper)
    return codes, ks


def _codes(x) -> tuple[np.ndarray, int]:
    """Dense integer codes ``0..k-1`` (in sorted value order) and ``k``."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError("label vector must be one-dimensional")
    if arr.size == 0:
        raise ValueError("label vector is empty")
    if arr.dtype.kind in "iu":
        lo, hi = int(arr.min()), int(arr.max())
        if hi - lo <= 4 * arr.size + 64:
            return _remap(arr.astype(np.int64) - lo, hi - lo)
    values, inverse = np.unique(arr, return_inverse=True)
    return inverse.reshape(-1).astype(np.int64), values.size


@numba.njit(cache=True)
def _table(cx, kx, cy, ky):
    counts = np.zeros((kx, ky), dtype=np.int64)
    for i in range(cx.size):
        counts[cx[i], cy[i]] += 1
    return counts


def _pair(x, y) -> np.ndarray:
    cx, kx = _codes(x)
    cy, ky = _codes(y)
    if cx.size != cy.size:
        raise ValueError(f"length mismatch: {cx.size} vs {cy.size}")
    return _table(cx, kx, cy, ky)


def contingency(x, y) -> ContingencyTable:
    return ContingencyTable(_pair(x, y))


@numba.njit(cache=True)
def _entropy_nb(counts):
    # H = log N - sum(c log c) / N over the non-zero counts
    n = 0
    s = 0.0
    occupied = 0
    for c in counts:
        if c > 0:
            n += c
            s += c * math.log(c)
            occupied += 1
    if occupied <= 1:
        return 0.0
    return max(math.log(n) - s / n, 0.0)


def _entropy_counts(counts: np.ndarray) -> float:
    return float(_entropy_nb(np.ascontiguousarray(counts, dtype=np.int64).ravel()))


def entropy(x) -> float:
    cx, kx = _codes(x)
    return _entropy_counts(np.bincount(cx, minlength=kx))


def joint_entropy(x, y) -> float:
    return _entropy_counts(_pair(x, y).ravel())


@numba.njit(cache=True)
def _log_tables(n):
    """log(i) and log(i!) for i = 0..n (log 0 is set to 0; it is never used)."""
    log_i = np.zeros(n + 1)
    log_fact = np.zeros(n + 1)
    for i in range(1, n + 1):
        log_i[i] = math.log(i)
        log_fact[i] = log_fact[i - 1] + log_i[i]
    return log_i, log_fact


@numba.njit(cache=True)
def _emi(a, b, n, log_i, log_fact):
    total = 0.0
    for ai in a:
        if ai == 0:
            continue
        for bj in b:
            if bj == 0:
                continue
            const = log_fact[ai] + log_fact[bj] + log_fact[n - ai] + log_fact[n - bj] - log_fact[n]
            log_ratio = log_i[n] - log_i[ai] - log_i[bj]
            start = max(1, ai + bj - n)
            stop = min(ai, bj)
            for nij in range(start, stop + 1):
                log_p = (
                    const
                    - log_fact[nij]
                    - log_fact[ai - nij]
                    - log_fact[bj - nij]
                    - log_fact[n - ai - bj + nij]
                )
                total += nij / n * (log_ratio + log_i[nij]) * math.exp(log_p)
    return total


@numba.njit(cache=True)
def _marginals(counts):
    a = np.zeros(counts.shape[0], dtype=np.int64)
    b = np.zeros(counts.shape[1], dtype=np.int64)
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            a[i] += counts[i, j]
            b[j] += counts[i, j]
    return a, b


@numba.njit(cache=True)
def _mi_nb(counts):
    a, b = _marginals(counts)
    hx = _entropy_nb(a)
    hy = _entropy_nb(b)
    hxy = _entropy_nb(counts.ravel())
    return max(hx + hy - hxy, 0.0), hx, hy


@numba.njit(cache=True)
def _identical(counts):
    n_rows, n_cols = counts.shape
    for i in range(n_rows):
        hits = 0
        for j in range(n_cols):
            if counts[i, j] > 0:
                hits += 1
        if hits > 1:
            return False
    for j in range(n_cols):
        hits = 0
        for i in range(n_rows):
            if counts[i, j] > 0:
                hits += 1
        if hits > 1:
            return False
    return True


@numba.njit(cache=True)
def _scores(counts, log_i, log_fact):
    """(mi, hx, hy, emi, identical partitions) for a contingency table."""
    a, b = _marginals(counts)
    hx = _entropy_nb(a)
    hy = _entropy_nb(b)
    hxy = _entropy_nb(counts.ravel())
    mi = max(hx + hy - hxy, 0.0)
    emi = max(_emi(a, b, a.sum(), log_i, log_fact), 0.0)
    return mi, hx, hy, emi, _identical(counts)


def mutual_information(x, y) -> float:
    return float(_mi_nb(_pair(x, y))[0])


def expected_mi(table: ContingencyTable) -> float:
    """Expected mutual information under the permutation (hypergeometric) model
    with the table's marginals held fixed."""
    a = np.ascontiguousarray(table.row_sums, dtype=np.int64)
    b = np.ascontiguousarray(table.col_sums, dtype=np.int64)
    n = table.total
    return max(float(_emi(a, b, n, *_log_tables(n))), 0.0)


@numba.njit(cache=True)
def _ami_nb(counts, log_i, log_fact):
    mi, hx, hy, emi, identical = _scores(counts, log_i, log_fact)
    if identical:
        # also covers a vanishing normaliser: identical partitions score 1
        return 1.0
    denom = 0.5 * (hx + hy) - emi
    if abs(denom) < 1e-12:
        return 0.0
    return (mi - emi) / denom


@numba.njit(cache=True)
def _ami_rows(codes, ks, target, k_target):
    n_rows = codes.shape[0]
    log_i, log_fact = _log_tables(target.size)
    cf = np.empty(n_rows)
    ff = np.eye(n_rows)
    for i in range(n_rows):
        cf[i] = _ami_nb(_table(target, k_target, codes[i], ks[i]), log_i, log_fact)
        for j in range(i + 1, n_rows):
            v = _ami_nb(_table(codes[i], ks[i], codes[j], ks[j]), log_i, log_fact)
            ff[i, j] = v
            ff[j, i] = v
    return cf, ff


def _ami_counts(counts: np.ndarray) -> float:
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    return float(_ami_nb(counts, *_log_tables(int(counts.sum()))))


def ami_matrix(rows, target) -> tuple[np.ndarray, np.ndarray]:
    """AMI of every row against ``target`` and of every pair of rows.

    Equivalent to calling :func:`ami` on each pair, in a single compiled pass.
    Returns ``(row_vs_target, row_vs_row)``; the diagonal of the latter is one.
    """
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-D array of label vectors")
    target_codes, k_target = _codes(target)
    if rows.shape[1] != target_codes.size:
        raise ValueError(f"length mismatch: {rows.shape[1]} vs {target_codes.size}")
    if rows.dtype.kind in "iu" and rows.size and int(rows.max()) - int(rows.min()) <= 4 * rows.shape[1] + 64:
        codes, ks = _remap_rows(rows.astype(np.int64) - int(rows.min()), int(rows.max()) - int(rows.min()))
    else:
        coded = [_codes(r) for r in rows]
        codes = np.array([c for c, _ in coded], dtype=np.int64).reshape(rows.shape)
        ks = np.array([k for _, k in coded], dtype=np.int64)
    cf, ff = _ami_rows(codes, ks, target_codes, k_target)
    return cf, ff


def ami(x, y) -> float:
    """Adjusted mutual information with the arithmetic mean of the entropies.

    Chance-level agreement scores about zero and can go slightly negative.
    When the normaliser vanishes (both vectors nearly constant) the score is
    1.0 for identical partitions and 0.0 otherwise.
    """
    return _ami_counts(_pair(x, y))


def symmetrical_uncertainty(x, y) -> float:
    mi, hx, hy = _mi_nb(_pair(x, y))
    if hx + hy < _GUARD:
        return 0.0
    return 2.0 * mi / (hx + hy)


def pearson(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("pearson needs two 1-D vectors of equal length")
    if u.size < 2:
        raise ValueError("pearson needs at least two points")
    du = u - u.mean()
    dv = v - v.mean()
    su = math.sqrt(float(du @ du))
    sv = math.sqrt(float(dv @ dv))
    if su == 0.0 or sv == 0.0:
        raise ValueError("pearson is undefined for a constant vector")
    return max(-1.0, min(1.0, float(du @ dv) / (su * sv)))
