"""Level-two area processes, rough path triples, Chen's relation and rough seminorms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError, ResolutionExceeded
from .partitions import NestedPartitionSequence, Partition, discretize
from .paths import CadlagPath
from .variation import EXACT_CAP, dense_norms, p_variation, two_param_p_variation

CHEN_CAP = 600


@dataclass(frozen=True, eq=False)
class AreaProcess:
    """Lazily evaluated two-parameter function in area form (see ``_kernels``).

    Evaluation at a pair of grid indices is O(L d e) after an O(N) precompute,
    so no (N, N) table is ever stored.
    """

    times: np.ndarray
    J: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    coef: np.ndarray

    @property
    def size(self) -> int:
        return self.times.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.J.shape[2], self.J.shape[3]

    @classmethod
    def zero(cls, times: np.ndarray, d: int, e: int | None = None) -> "AreaProcess":
        e = d if e is None else e
        n = np.asarray(times).size
        return cls(
            np.asarray(times, dtype=float),
            np.zeros((0, n, d, e)),
            np.zeros((0, n, d)),
            np.zeros((0, n, e)),
            np.zeros((0, n, e)),
            np.zeros(0),
        )

    def area_arrays(self, indices=None):
        if indices is None:
            return self.J, self.a, self.b, self.c, self.coef
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        take = lambda arr: np.ascontiguousarray(arr[:, idx])
        return take(self.J), take(self.a), take(self.b), take(self.c), self.coef

    def values(self, ii, jj) -> np.ndarray:
        ii = np.atleast_1d(np.asarray(ii, dtype=np.int64))
        jj = np.atleast_1d(np.asarray(jj, dtype=np.int64))
        ii, jj = np.broadcast_arrays(ii, jj)
        return K.area_values(self.J, self.a, self.b, self.c, self.coef, ii.ravel().copy(), jj.ravel().copy()).reshape(
            ii.shape + self.shape
        )

    def __call__(self, s: float, t: float) -> np.ndarray:
        i, j = (int(np.argmin(np.abs(self.times - x))) for x in (s, t))
        if abs(self.times[i] - s) > 1e-12 or abs(self.times[j] - t) > 1e-12:
            raise DomainError("area processes are evaluated at grid times")
        return self.values(i, j)[0]

    def dense(self, indices=None) -> np.ndarray:
        """(M, M, d, e) table on the selected points; entries with i >= j are 0."""
        idx = np.arange(self.size) if indices is None else np.unique(np.asarray(indices, dtype=np.int64))
        m = idx.size
        ii, jj = np.triu_indices(m, 1)
        out = np.zeros((m, m) + self.shape)
        out[ii, jj] = self.values(idx[ii], idx[jj])
        return out

    def sup_norm(self, indices=None) -> float:
        """sup over pairs i < j of the Frobenius norm."""
        if self.coef.size == 0:
            return 0.0
        return float(K.area_sup(*self.area_arrays(indices)))

    def _combine(self, other: "AreaProcess", sign: float) -> "AreaProcess":
        if self.size != other.size or self.shape != other.shape:
            raise DomainError("area processes live on different grids")
        cat = lambda x, y: np.concatenate([x, y], axis=0)
        return AreaProcess(
            self.times,
            cat(self.J, other.J),
            cat(self.a, other.a),
            cat(self.b, other.b),
            cat(self.c, other.c),
            cat(self.coef, sign * other.coef),
        )

    def __add__(self, other: "AreaProcess") -> "AreaProcess":
        return self._combine(other, 1.0)

    def __sub__(self, other: "AreaProcess") -> "AreaProcess":
        return self._combine(other, -1.0)

    def scaled(self, lam: float) -> "AreaProcess":
        return AreaProcess(self.times, self.J, self.a, self.b, self.c, lam * self.coef)


def running_integral(U: CadlagPath, V: CadlagPath, partition: Partition) -> np.ndarray:
    """t ↦ ∫_0^t U^n ⊗ dV at every grid time, shape (N+1, d, e)."""
    J, a, b, c = _block_pieces(U, V, partition)
    return J + a[:, :, None] * (b - c)[:, None, :]


def _block_pieces(U: CadlagPath, V: CadlagPath, partition: Partition):
    if U.times.size != V.times.size or partition.grid.size != U.times.size:
        raise DomainError("paths and partition must share a grid")
    idx = partition.indices
    bs = partition.block_starts()
    blk = partition.block_ids()
    Ub = U.values[idx]
    Vb = V.values[idx]
    per_block = Ub[:-1, :, None] * np.diff(Vb, axis=0)[:, None, :]
    Jcum = np.concatenate([np.zeros((1,) + per_block.shape[1:]), np.cumsum(per_block, axis=0)])
    return Jcum[blk], U.values[bs], V.values, V.values[bs]


def area_n(S: CadlagPath, partition: Partition, integrator: CadlagPath | None = None) -> AreaProcess:
    """A^n_{s,t} = ∫_s^t S^n_{s,u} ⊗ dV_u with V = ``integrator`` (default S).

    Exactly zero when s and t lie in one block of ``partition``.
    """
    V = S if integrator is None else integrator
    J, a, b, c = _block_pieces(S, V, partition)
    return AreaProcess(
        S.times,
        np.ascontiguousarray(J[None]),
        np.ascontiguousarray(a[None]),
        np.ascontiguousarray(b[None]),
        np.ascontiguousarray(c[None]),
        np.ones(1),
    )


def limit_area(S: CadlagPath, seq: NestedPartitionSequence, indices=None) -> tuple[AreaProcess, float]:
    """Finest area A^{n_max} and its Cauchy error sup |A^{n_max} − A^{n_max−1}|.

    The supremum runs over all pairs of the grid, or of ``indices`` if given.
    """
    if seq.n_max < 2:
        raise DomainError("limit_area needs at least two levels")
    fine = area_n(S, seq.level(seq.n_max))
    prev = area_n(S, seq.level(seq.n_max - 1))
    return fine, (fine - prev).sup_norm(indices)


@dataclass(frozen=True, eq=False)
class RoughPathTriple:
    """(X, Z, XX) with XX_{s,t} ≈ ∫_s^t Z_{s,u} ⊗ dX_u.

    ``XX`` is an :class:`AreaProcess` or a dense (M, M, d, e) array.
    """

    X: CadlagPath
    Z: CadlagPath
    XX: object

    def __post_init__(self):
        if not np.array_equal(self.X.times, self.Z.times):
            raise DomainError("X and Z must share a grid")

    @property
    def times(self) -> np.ndarray:
        return self.X.times

    def xx_dense(self, indices=None) -> np.ndarray:
        if isinstance(self.XX, AreaProcess):
            return self.XX.dense(indices)
        arr = np.asarray(self.XX, dtype=float)
        if indices is not None:
            idx = np.unique(np.asarray(indices, dtype=np.int64))
            arr = arr[np.ix_(idx, idx)]
        return arr

    def xx_values(self, ii, jj) -> np.ndarray:
        if isinstance(self.XX, AreaProcess):
            return self.XX.values(ii, jj)
        arr = np.asarray(self.XX, dtype=float)
        return arr[np.asarray(ii), np.asarray(jj)]


def lift(S: CadlagPath, partition: Partition) -> RoughPathTriple:
    """(S, S^n, A^n), which satisfies Chen's relation exactly."""
    return RoughPathTriple(S, discretize(S, partition), area_n(S, partition))


def limit_triple(S: CadlagPath, seq: NestedPartitionSequence) -> RoughPathTriple:
    """(S, S, A^{n_max}), the numerical stand-in for the limiting rough path."""
    return RoughPathTriple(S, S, area_n(S, seq.level(seq.n_max)))


def chen_defect(triple: RoughPathTriple, indices=None, cap: int = CHEN_CAP) -> float:
    """max over s<u<t of |XX_{s,t} − XX_{s,u} − XX_{u,t} − Z_{s,u} ⊗ X_{u,t}|."""
    idx = np.arange(triple.times.size) if indices is None else np.unique(np.asarray(indices, dtype=np.int64))
    m = idx.size
    if m > cap:
        raise ResolutionExceeded(int(m), cap)
    if m < 3:
        return 0.0
    XX = triple.xx_dense(idx)
    Z = triple.Z.values[idx]
    X = triple.X.values[idx]
    worst = 0.0
    for u in range(1, m - 1):
        zsu = Z[u] - Z[:u]  # (u, d)
        xut = X[u + 1 :] - X[u]  # (m-u-1, e)
        gap = (
            XX[:u, u + 1 :]
            - XX[:u, u][:, None]
            - XX[u, u + 1 :][None]
            - zsu[:, None, :, None] * xut[None, :, None, :]
        )
        worst = max(worst, float(np.sqrt(np.max(np.sum(gap**2, axis=(2, 3))))))
    return worst


def _xx_pvar(XX, p: float, indices, cap: int) -> float:
    if isinstance(XX, AreaProcess):
        if XX.coef.size == 0:
            return 0.0
        return two_param_p_variation(XX, p, indices=indices, cap=cap)
    return two_param_p_variation(dense_norms(XX, indices), p, cap=cap)


def _interval_indices(times: np.ndarray, interval, indices) -> np.ndarray | None:
    if interval is None:
        return indices
    s, t = interval
    idx = np.arange(times.size) if indices is None else np.unique(np.asarray(indices, dtype=np.int64))
    keep = idx[(times[idx] >= s - 1e-12) & (times[idx] <= t + 1e-12)]
    if keep.size < 2:
        raise DomainError("interval contains fewer than two selected grid points")
    return keep


def rough_seminorm(
    triple: RoughPathTriple, p: float, interval=None, indices=None, cap: int = EXACT_CAP
) -> float:
    """‖X‖_p + ‖Z‖_p + ‖XX‖_{p/2} on [s, t] (restricted to ``indices`` if given)."""
    idx = _interval_indices(triple.times, interval, indices)
    return (
        p_variation(triple.X, p, indices=idx, cap=cap)
        + p_variation(triple.Z, p, indices=idx, cap=cap)
        + _xx_pvar(triple.XX, p / 2, idx, cap)
    )


def rough_distance(
    first: RoughPathTriple,
    second: RoughPathTriple,
    p: float,
    interval=None,
    indices=None,
    cap: int = EXACT_CAP,
) -> float:
    """‖X − X~‖_p + ‖Z − Z~‖_p + ‖XX − XX~‖_{p/2}."""
    if not np.array_equal(first.times, second.times):
        raise DomainError("triples live on different grids")
    idx = _interval_indices(first.times, interval, indices)
    if isinstance(first.XX, AreaProcess) and isinstance(second.XX, AreaProcess):
        dxx, xx_idx = first.XX - second.XX, idx
    else:
        # dense tables are already cut down to the selected points
        dxx, xx_idx = first.xx_dense(idx) - second.xx_dense(idx), None
    return (
        p_variation(first.X - second.X, p, indices=idx, cap=cap)
        + p_variation(first.Z - second.Z, p, indices=idx, cap=cap)
        + _xx_pvar(dxx, p / 2, xx_idx, cap)
    )
