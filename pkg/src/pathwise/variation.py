"""p-variation of paths and two-parameter functions, and control-function tables.

All values are exact suprema over sub-partitions of the points supplied, found
by dynamic programming. Restricting to a subset of grid points therefore gives
a lower bound for the grid value; callers that coarsen must say so.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError, ResolutionExceeded
from .paths import CadlagPath

EXACT_CAP = 5000
TABLE_CAP = 1000


def _select(times: np.ndarray, interval, indices) -> np.ndarray:
    n = times.size
    if indices is None:
        idx = np.arange(n)
    else:
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise DomainError("indices outside the grid")
    if interval is not None:
        s, t = interval
        if not s < t:
            raise DomainError("interval needs s < t")
        lo = times[idx] >= s - 1e-12
        hi = times[idx] <= t + 1e-12
        idx = idx[lo & hi]
        if idx.size == 0 or abs(times[idx[0]] - s) > 1e-12 or abs(times[idx[-1]] - t) > 1e-12:
            raise DomainError("interval endpoints must be among the selected grid times")
    return idx


def _check_p(p: float) -> None:
    if not p >= 1:
        raise DomainError("p must be >= 1")


def p_variation(
    path: CadlagPath,
    p: float,
    interval: tuple[float, float] | None = None,
    indices=None,
    cap: int = EXACT_CAP,
) -> float:
    """‖path‖_{p,[s,t]} over the grid (or the given index subset)."""
    _check_p(p)
    idx = _select(path.times, interval, indices)
    if idx.size > cap:
        raise ResolutionExceeded(int(idx.size), cap)
    if idx.size < 2:
        return 0.0
    x = np.ascontiguousarray(path.values[idx])
    return float(K.dp_path(x, float(p)) ** (1.0 / p))


def p_variation_upper_bound(path: CadlagPath, p: float, block: int = EXACT_CAP) -> float:
    """Upper bound on ‖path‖_p: sum of exact values over consecutive dyadic blocks.

    Adjacent intervals satisfy ‖x‖_{[s,t]} ≤ ‖x‖_{[s,u]} + ‖x‖_{[u,t]} (Minkowski),
    so the sum bounds the whole. This is a bound, not the value.
    """
    _check_p(p)
    n = path.times.size
    width = 1 << max(int(np.floor(np.log2(max(block - 1, 1)))), 1)
    total = 0.0
    for start in range(0, n - 1, width):
        stop = min(start + width, n - 1)
        x = np.ascontiguousarray(path.values[start : stop + 1])
        total += K.dp_path(x, float(p)) ** (1.0 / p)
    return float(total)


def two_param_p_variation(A, p: float, indices=None, cap: int = EXACT_CAP) -> float:
    """‖A‖_{p,[0,T]} for a two-parameter grid function.

    ``A`` is either an object exposing ``area_arrays(indices)`` (area-form
    functions from :mod:`pathwise.roughpath`) or a dense array of shape
    (M, M), (M, M, d) or (M, M, d, e) holding A(t_i, t_j) for i < j.
    """
    _check_p(p)
    if hasattr(A, "area_arrays"):
        m = A.size if indices is None else np.unique(np.asarray(indices)).size
        if m > cap:
            raise ResolutionExceeded(int(m), cap)
        if m < 2:
            return 0.0
        arrays = A.area_arrays(indices)
        return float(K.dp_area(*arrays, float(p)) ** (1.0 / p))
    norms = dense_norms(A, indices)
    if norms.shape[0] > cap:
        raise ResolutionExceeded(int(norms.shape[0]), cap)
    if norms.shape[0] < 2:
        return 0.0
    return float(K.dp_dense(norms, float(p)) ** (1.0 / p))


def dense_norms(A, indices=None) -> np.ndarray:
    arr = np.asarray(A, dtype=float)
    if arr.ndim < 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError("dense two-parameter functions need shape (M, M, ...)")
    if indices is not None:
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        arr = arr[np.ix_(idx, idx)]
    if arr.ndim > 2:
        arr = np.sqrt(np.sum(arr.reshape(arr.shape[0], arr.shape[1], -1) ** 2, axis=-1))
    return np.ascontiguousarray(np.abs(arr))


@dataclass(frozen=True, eq=False)
class VariationTable:
    """w(t_i, t_j) for all i < j of a grid subset; the diagonal and below are 0."""

    times: np.ndarray
    w: np.ndarray
    indices: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.shape != (self.times.size, self.times.size):
            raise DomainError("table shape must match its time points")
        object.__setattr__(self, "w", w)

    def __call__(self, s: float, t: float) -> float:
        i = int(np.searchsorted(self.times, s - 1e-12))
        j = int(np.searchsorted(self.times, t - 1e-12))
        if self.times[i] != s and abs(self.times[i] - s) > 1e-12:
            raise DomainError(f"{s} is not a table time")
        if self.times[j] != t and abs(self.times[j] - t) > 1e-12:
            raise DomainError(f"{t} is not a table time")
        return float(self.w[i, j]) if i < j else 0.0

    def __add__(self, other: "VariationTable") -> "VariationTable":
        self._check(other)
        return VariationTable(self.times, self.w + other.w, self.indices)

    def maximum(self, other: "VariationTable") -> "VariationTable":
        self._check(other)
        return VariationTable(self.times, np.maximum(self.w, other.w), self.indices)

    def _check(self, other: "VariationTable") -> None:
        if not np.array_equal(self.times, other.times):
            raise DomainError("tables live on different time points")

    def to_csv(self) -> str:
        head = ",".join(["s\\t"] + [repr(float(t)) for t in self.times])
        rows = [
            ",".join([repr(float(s))] + [repr(float(v)) for v in row])
            for s, row in zip(self.times, self.w)
        ]
        return "\n".join([head] + rows) + "\n"


def variation_control(
    path: CadlagPath, p: float, indices=None, cap: int = TABLE_CAP
) -> VariationTable:
    """w(s,t) = ‖path‖_{p,[s,t]}^p for all pairs of the selected grid points."""
    _check_p(p)
    idx = _select(path.times, None, indices)
    if idx.size > cap:
        raise ResolutionExceeded(int(idx.size), cap)
    x = np.ascontiguousarray(path.values[idx])
    return VariationTable(path.times[idx], K.dp_path_table(x, float(p)), idx)


def two_param_control(A, p: float, times: np.ndarray, indices=None, cap: int = TABLE_CAP) -> VariationTable:
    """w(s,t) = ‖A‖_{p,[s,t]}^p for a two-parameter function (see two_param_p_variation)."""
    _check_p(p)
    idx = np.arange(times.size) if indices is None else np.unique(np.asarray(indices, dtype=np.int64))
    if idx.size > cap:
        raise ResolutionExceeded(int(idx.size), cap)
    if hasattr(A, "area_arrays"):
        W = K.dp_area_table(*A.area_arrays(idx), float(p))
    else:
        W = K.dp_dense_table(dense_norms(A, idx), float(p))
    return VariationTable(np.asarray(times)[idx], W, idx)


def superadditivity_defect(table: VariationTable) -> float:
    """max over s<u<t of w(s,u) + w(u,t) - w(s,t); <= 0 means superadditive."""
    return float(K.superadditivity_defect(np.ascontiguousarray(table.w)))
