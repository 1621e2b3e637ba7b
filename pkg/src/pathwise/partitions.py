"""Partitions of a path's sample grid and Lebesgue (oscillation-crossing) sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .errors import DomainError
from .paths import CadlagPath


@dataclass(frozen=True, eq=False)
class Partition:
    """Sorted grid indices (always containing 0 and N) into ``grid``."""

    indices: np.ndarray
    grid: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        grid = np.asarray(self.grid, dtype=float)
        if idx.ndim != 1 or idx.size < 2:
            raise DomainError("a partition needs at least the two endpoints")
        if idx[0] != 0 or idx[-1] != grid.size - 1:
            raise DomainError("partition must contain 0 and T")
        if np.any(np.diff(idx) <= 0):
            raise DomainError("partition indices must be strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def full(cls, grid: np.ndarray) -> "Partition":
        return cls(np.arange(len(grid)), grid)

    @classmethod
    def trivial(cls, grid: np.ndarray) -> "Partition":
        return cls(np.array([0, len(grid) - 1]), grid)

    @classmethod
    def from_times(cls, times: Sequence[float], grid: np.ndarray) -> "Partition":
        grid = np.asarray(grid, dtype=float)
        return cls(np.array([_grid_index(grid, t) for t in times]), grid)

    @property
    def times(self) -> np.ndarray:
        return self.grid[self.indices]

    def __len__(self) -> int:
        return self.indices.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and np.array_equal(self.indices, other.indices)

    __hash__ = None

    def is_full(self) -> bool:
        return self.indices.size == self.grid.size

    def block_starts(self) -> np.ndarray:
        """For every grid index j, the largest partition index <= j."""
        pos = np.searchsorted(self.indices, np.arange(self.grid.size), side="right") - 1
        return self.indices[pos]

    def block_ids(self) -> np.ndarray:
        """For every grid index j, the position of its block in ``indices``."""
        return np.searchsorted(self.indices, np.arange(self.grid.size), side="right") - 1

    def issubset(self, other: "Partition") -> bool:
        return bool(np.all(np.isin(self.indices, other.indices)))


def _grid_index(grid: np.ndarray, t: float) -> int:
    k = int(np.searchsorted(grid, t))
    for j in (k - 1, k):
        if 0 <= j < grid.size and math.isclose(grid[j], t, rel_tol=1e-12, abs_tol=1e-12):
            return j
    raise DomainError(f"{t} is not a grid time")


def restrict(partition: Partition, u: float, v: float) -> Partition:
    """(P ∪ {u, v}) ∩ [u, v], returned as a partition of the sub-grid [u, v].

    The result's ``grid`` is the owning grid cut to [u, v], so its indices are
    offsets from ``u``; ``times`` gives absolute times.
    """
    if not u < v:
        raise DomainError("restriction needs u < v")
    grid = partition.grid
    iu, iv = _grid_index(grid, u), _grid_index(grid, v)
    idx = partition.indices
    inner = idx[(idx > iu) & (idx < iv)]
    return Partition(np.concatenate([[iu], inner, [iv]]) - iu, grid[iu : iv + 1])


def mesh(partition: Partition) -> float:
    return float(np.max(np.diff(partition.times)))


def discretize(path: CadlagPath, partition: Partition) -> CadlagPath:
    """S^n: S at the left end of each block; S_T at T."""
    _check_owner(path, partition)
    return CadlagPath(path.times, path.values[partition.block_starts()])


def _check_owner(path: CadlagPath, partition: Partition) -> None:
    if partition.grid.size != path.times.size or not np.array_equal(partition.grid, path.times):
        raise DomainError("partition does not live on this path's grid")


@dataclass(frozen=True, eq=False)
class NestedPartitionSequence:
    """Levels 1..n_max; ``level(n)`` is 1-based, ``levels[n-1]`` is the same."""

    levels: tuple[Partition, ...]
    owner: CadlagPath
    base: float = 1.0
    n_star: int | None = None

    def __post_init__(self):
        if not self.levels:
            raise DomainError("need at least one level")
        for a, b in zip(self.levels, self.levels[1:]):
            if not a.issubset(b):
                raise DomainError("levels are not nested")

    @property
    def n_max(self) -> int:
        return len(self.levels)

    def level(self, n: int | str) -> Partition:
        if n == "full":
            return Partition.full(self.owner.times)
        n = int(n)
        if not 1 <= n <= self.n_max:
            raise DomainError(f"level {n} outside 1..{self.n_max}")
        return self.levels[n - 1]

    @property
    def finest(self) -> Partition:
        return self.levels[-1]

    def union_indices(self) -> np.ndarray:
        """Indices of the union over all levels n >= 1.

        Levels keep refining past ``n_max``; once the grid is reached
        (``n_star`` known) the union is the whole grid.
        """
        if self.n_star is not None:
            return np.arange(self.owner.times.size)
        return self.finest.indices

    def threshold(self, n: int) -> float:
        return self.base * 2.0**-n

    def largest_level_within(self, cap: int) -> Partition:
        """The finest level (or the full grid) with at most ``cap`` points."""
        if self.owner.times.size <= cap:
            return Partition.full(self.owner.times)
        best = None
        for part in self.levels:
            if len(part) <= cap:
                best = part
        if best is None:
            # levels coarser than level 1 are not available; thin level 1 evenly
            idx = self.levels[0].indices
            keep = np.unique(np.linspace(0, idx.size - 1, cap).round().astype(np.int64))
            best = Partition(idx[keep], self.owner.times)
        return best

    def to_text(self) -> str:
        return "".join(" ".join(map(str, p.indices.tolist())) + "\n" for p in self.levels)

    def write(self, target) -> None:
        Path(target).write_text(self.to_text())

    @classmethod
    def read(cls, source, owner: CadlagPath, base: float = 1.0) -> "NestedPartitionSequence":
        lines = [ln for ln in Path(source).read_text().splitlines() if ln.strip()]
        levels = tuple(Partition(np.array(ln.split(), dtype=np.int64), owner.times) for ln in lines)
        return cls(levels, owner, base, _first_full(levels))


def _first_full(levels) -> int | None:
    for n, part in enumerate(levels, 1):
        if part.is_full():
            return n
    return None


@numba.njit(cache=True)
def _crossing_mask(vals, groups, h):
    n1 = vals.shape[0]
    mask = np.zeros(n1, dtype=np.bool_)
    mask[0] = True
    tau = 0
    for j in range(1, n1):
        for g in range(groups.size - 1):
            acc = 0.0
            for c in range(groups[g], groups[g + 1]):
                diff = vals[j, c] - vals[tau, c]
                acc += diff * diff
            if math.sqrt(acc) >= h:
                mask[j] = True
                tau = j
                break
    return mask


def constancy_runs(values: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs a..b (b > a) of exactly equal consecutive samples."""
    same = np.all(values[1:] == values[:-1], axis=1)
    runs = []
    k, n = 0, same.size
    while k < n:
        if same[k]:
            a = k
            while k < n and same[k]:
                k += 1
            runs.append((a, k))
        else:
            k += 1
    return runs


def _constancy_mask(times: np.ndarray, runs, spacing: float) -> np.ndarray:
    mask = np.zeros(times.size, dtype=bool)
    for a, b in runs:
        mask[a] = True
        mask[b] = True
        ta, tb = times[a], times[b]
        count = int(math.floor((tb - ta) / spacing))
        if count < 1:
            continue
        targets = ta + spacing * np.arange(1, count + 1)
        targets = targets[targets < tb]
        # snap each target up to the next grid time, clipped to the run end
        snapped = np.minimum(np.searchsorted(times, targets - 1e-12 * spacing, side="left"), b)
        mask[snapped] = True
    return mask


def lebesgue_sequence(
    path: CadlagPath,
    n_max: int,
    base: float = 1.0,
    drivers: Sequence[CadlagPath] | None = None,
    star_search: int = 64,
) -> NestedPartitionSequence:
    """Nested crossing partitions at thresholds ``base * 2**-n``, n = 1..n_max.

    A new point is set at the first grid index where some driver (default: the
    path itself) has moved by at least the threshold, in Euclidean norm, since
    the previous point of that level. Level n is the union of levels 1..n plus
    constancy-run points (run start, run end and points spaced ``T * 2**-n``
    inside the run), plus both endpoints.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if not base > 0:
        raise DomainError("base must be positive")
    if len(path) < 2:
        raise DomainError("need a path with at least two samples")
    drivers = [path] if not drivers else list(drivers)
    for drv in drivers:
        if not np.array_equal(drv.times, path.times):
            raise DomainError("drivers must share the path's grid")
    vals = np.ascontiguousarray(np.hstack([d.values for d in drivers]))
    groups = np.cumsum([0] + [d.dim for d in drivers]).astype(np.int64)
    runs = constancy_runs(path.values)
    horizon = path.horizon
    n_grid = path.times.size

    union = np.zeros(n_grid, dtype=bool)
    union[0] = union[-1] = True
    levels = []
    n_star = None
    n = 0
    while n < max(n_max, star_search if n_star is None else n_max):
        n += 1
        union |= _crossing_mask(vals, groups, base * 2.0**-n)
        if runs:
            union |= _constancy_mask(path.times, runs, horizon * 2.0**-n)
        if n <= n_max:
            levels.append(Partition(np.flatnonzero(union), path.times))
        if n_star is None and union.all():
            n_star = n
        if n >= n_max and n_star is not None:
            break
    return NestedPartitionSequence(tuple(levels), path, float(base), n_star)


def full_grid_sequence(path: CadlagPath, n_max: int = 1) -> NestedPartitionSequence:
    """All levels equal to the sample grid (useful for already-refined data)."""
    full = Partition.full(path.times)
    return NestedPartitionSequence(tuple([full] * n_max), path, 1.0, 1)
