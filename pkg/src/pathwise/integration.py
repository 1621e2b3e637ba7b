"""Rough, left-point and Young integrals; discrete quadratic variation and the
calculus identities built on it (integration by parts, rough Itô formula)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controlled import C2Function, ControlledPath
from .errors import ContractError, DomainError, ResolutionExceeded
from .partitions import NestedPartitionSequence, Partition
from .paths import CadlagPath
from .roughpath import RoughPathTriple, running_integral
from .variation import EXACT_CAP, p_variation

DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class IntegralPath:
    """Running integral on the grid; ``values[0]`` is 0."""

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def terminal(self):
        return self.values[-1]

    def to_csv(self) -> str:
        flat = self.values.reshape(self.times.size, -1)
        if flat.shape[1] == 1:
            head = ["t", "value"]
        else:
            head = ["t"] + [f"v{k + 1}" for k in range(flat.shape[1])]
        lines = [",".join(head)]
        for t, row in zip(self.times, flat):
            lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class QuadraticVariation:
    times: np.ndarray
    values: np.ndarray  # (N+1, d, d)
    level: int | str | None = None

    def component(self, i: int, j: int | None = None) -> np.ndarray:
        return self.values[:, i, i if j is None else j]

    def to_csv(self) -> str:
        d = self.values.shape[1]
        head = ["t"] + [f"q{i + 1}{j + 1}" for i in range(d) for j in range(d)]
        lines = [",".join(head)]
        for t, row in zip(self.times, self.values.reshape(self.times.size, -1)):
            lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"


def _resolve(source, path: CadlagPath, n=None) -> tuple[Partition, object]:
    """Accept a Partition, or a sequence plus level (int or "full")."""
    if isinstance(source, Partition):
        part, label = source, n
    elif isinstance(source, NestedPartitionSequence):
        level = source.n_max if n is None else n
        part, label = source.level(level), level
    elif source is None:
        part, label = Partition.full(path.times), "full"
    else:
        raise DomainError("expected a Partition or NestedPartitionSequence")
    if part.grid.size != path.times.size or not np.array_equal(part.grid, path.times):
        raise DomainError("partition does not live on this path's grid")
    return part, label


def _check_grid(*paths: CadlagPath) -> None:
    ref = paths[0].times
    for q in paths[1:]:
        if q.times.size != ref.size or not np.array_equal(q.times, ref):
            raise DomainError("incompatible grids")


def _left_point_running(F: np.ndarray, S: np.ndarray, part: Partition) -> np.ndarray:
    """t ↦ Σ_k F_{u_k} · S_{u_k∧t, u_{k+1}∧t}, summed block by block."""
    idx = part.indices
    per_block = np.einsum("ka,ka->k", F[idx[:-1]], np.diff(S[idx], axis=0))
    cum = np.concatenate([[0.0], np.cumsum(per_block)])
    bs = part.block_starts()
    partial = np.einsum("ja,ja->j", F[bs], S - S[bs])
    return cum[part.block_ids()] + partial


def left_point_integral(
    F: CadlagPath, S: CadlagPath, seq=None, n=None
) -> IntegralPath:
    """Left-point Riemann sums of F against S along a partition level."""
    _check_grid(F, S)
    if F.dim != S.dim:
        raise DomainError("integrand and integrator dimensions differ")
    part, label = _resolve(seq, S, n)
    vals = _left_point_running(F.values, S.values, part)
    return IntegralPath(S.times, vals, {"method": "left_point", "level": label})


def discrete_qv(S: CadlagPath, seq=None, n=None) -> QuadraticVariation:
    """⟨S^i, S^j⟩^n_t = Σ_k S^i_{u_k∧t,u_{k+1}∧t} S^j_{u_k∧t,u_{k+1}∧t}."""
    part, label = _resolve(seq, S, n)
    idx = part.indices
    inc = np.diff(S.values[idx], axis=0)
    cum = np.concatenate([np.zeros((1, S.dim, S.dim)), np.cumsum(inc[:, :, None] * inc[:, None, :], axis=0)])
    part_inc = S.values - S.values[part.block_starts()]
    vals = cum[part.block_ids()] + part_inc[:, :, None] * part_inc[:, None, :]
    return QuadraticVariation(S.times, vals, label)


def follmer_bracket(qv_i, qv_j, qv_iplusj) -> np.ndarray:
    """½([S^i + S^j] − [S^i] − [S^j]) for scalar bracket paths."""
    a, b, c = (np.asarray(getattr(x, "values", x), dtype=float).reshape(-1) for x in (qv_i, qv_j, qv_iplusj))
    if not a.shape == b.shape == c.shape:
        raise DomainError("bracket paths must share a grid")
    return 0.5 * (c - a - b)


def integration_by_parts_defect(S: CadlagPath, seq=None, n=None, t: float | None = None) -> float:
    """max_{i,j} |S^iS^j|_0^t − ∫S^{n,i}dS^j − ∫S^{n,j}dS^i − ⟨S^i,S^j⟩^n_t|.

    With ``t=None`` the maximum also runs over all grid times.
    """
    part, _ = _resolve(seq, S, n)
    I = running_integral(S, S, part)  # I[:, i, j] = ∫ S^{n,i} dS^j
    qv = discrete_qv(S, part).values
    prod = S.values[:, :, None] * S.values[:, None, :]
    gap = prod - prod[0] - I - np.swapaxes(I, 1, 2) - qv
    if t is not None:
        gap = gap[S.index_of(t)][None]
    return float(np.abs(gap).max())


# ---------------------------------------------------------------------------
# rough integrals


def _compensated_running(F: ControlledPath, G: ControlledPath, XX: RoughPathTriple, part: Partition) -> np.ndarray:
    """Σ_{[u,v]∈P} F_u·G_{u,v∧t} + Σ_{bc} (F'_u^T G'_u)_{bc} XX^{bc}_{u,v∧t} at every grid t."""
    idx = part.indices
    Fv, Gv = F.F.values, G.F.values
    comp = np.einsum("kab,kac->kbc", F.Fprime, G.Fprime)  # (N+1, dZ, dX)
    u, v = idx[:-1], idx[1:]
    block = np.einsum("ka,ka->k", Fv[u], Gv[v] - Gv[u]) + np.einsum("kbc,kbc->k", comp[u], XX.xx_values(u, v))
    cum = np.concatenate([[0.0], np.cumsum(block)])
    bs = part.block_starts()
    j = np.arange(Fv.shape[0])
    partial = np.einsum("ja,ja->j", Fv[bs], Gv - Gv[bs])
    mid = bs != j
    if np.any(mid):
        partial[mid] += np.einsum("kbc,kbc->k", comp[bs[mid]], XX.xx_values(bs[mid], j[mid]))
    return cum[part.block_ids()] + partial


def _refinements(seq, path: CadlagPath) -> list[tuple[object, Partition]]:
    if isinstance(seq, Partition):
        return [(None, seq)]
    out = []
    if isinstance(seq, NestedPartitionSequence):
        out = [(n, seq.level(n)) for n in range(1, seq.n_max + 1)]
    full = Partition.full(path.times)
    if not out or not out[-1][1].is_full():
        out.append(("full", full))
    return out


def compensated_rough_integral(
    F: ControlledPath,
    G: ControlledPath,
    X: RoughPathTriple,
    seq=None,
    tol: float = DEFAULT_TOL,
    local_estimates: bool = True,
) -> IntegralPath:
    """∫ F dG against the rough path X via compensated Riemann sums.

    F is controlled by Z and G by X (first component). With a sequence the sums
    are taken along its levels and then the full grid, stopping once the
    terminal value moves by less than ``tol``; the last gap is the error estimate.
    """
    _check_grid(F.F, G.F, X.X)
    if F.F.dim != G.F.dim:
        raise DomainError("F and G must have the same dimension")
    if F.Fprime.shape[2] != X.Z.dim or G.Fprime.shape[2] != X.X.dim:
        raise DomainError("derivative shapes do not match the rough path")
    steps = _refinements(seq, X.X)
    prev, gap, used, label = None, float("nan"), None, None
    history = []
    for label, part in steps:
        vals = _compensated_running(F, G, X, part)
        history.append(float(vals[-1]))
        done = prev is not None and abs(vals[-1] - prev[-1]) < tol
        if prev is not None:
            gap = float(abs(vals[-1] - prev[-1]))
        prev, used = vals, part
        if done:
            break
    meta = {"method": "compensated", "level": label, "error": gap, "terminal_history": history}
    if local_estimates:
        meta["local_estimate"] = local_estimate(F, G, X, used, prev)
    return IntegralPath(X.X.times, prev, meta)


def local_estimate(F: ControlledPath, G: ControlledPath, X: RoughPathTriple, part: Partition, running=None) -> np.ndarray:
    """Per block [u, v]: |∫_u^v F dG − F_u G_{u,v} − F'_u G'_u XX_{u,v}|.

    The integral over each block is taken from ``running`` (the finest
    compensated running values); this is zero when the blocks are grid steps.
    """
    if running is None:
        running = _compensated_running(F, G, X, Partition.full(X.X.times))
    idx = part.indices
    u, v = idx[:-1], idx[1:]
    comp = np.einsum("kab,kac->kbc", F.Fprime[u], G.Fprime[u])
    approx = np.einsum("ka,ka->k", F.F.values[u], G.F.values[v] - G.F.values[u]) + np.einsum(
        "kbc,kbc->k", comp, X.xx_values(u, v)
    )
    return np.abs(running[v] - running[u] - approx)


def rough_integral(F: ControlledPath, X: RoughPathTriple, seq=None, tol: float = DEFAULT_TOL) -> IntegralPath:
    """Classical controlled integral Σ F_u·X_{u,v} + tr(F'_u XX_{u,v}) (F controlled by Z)."""
    _check_grid(F.F, X.X)
    if F.F.dim != X.X.dim or F.Fprime.shape[2] != X.Z.dim:
        raise DomainError("F must be R^d-valued with derivative against Z")
    prev, gap, label = None, float("nan"), None
    for label, part in _refinements(seq, X.X):
        idx = part.indices
        u, v = idx[:-1], idx[1:]
        Xv = X.X.values
        block = np.einsum("ka,ka->k", F.F.values[u], Xv[v] - Xv[u]) + np.einsum(
            "kab,kba->k", F.Fprime[u], X.xx_values(u, v)
        )
        cum = np.concatenate([[0.0], np.cumsum(block)])
        bs = part.block_starts()
        j = np.arange(Xv.shape[0])
        partial = np.einsum("ja,ja->j", F.F.values[bs], Xv - Xv[bs])
        mid = bs != j
        if np.any(mid):
            partial[mid] += np.einsum("kab,kba->k", F.Fprime[bs[mid]], X.xx_values(bs[mid], j[mid]))
        vals = cum[part.block_ids()] + partial
        done = prev is not None and abs(vals[-1] - prev[-1]) < tol
        if prev is not None:
            gap = float(abs(vals[-1] - prev[-1]))
        prev = vals
        if done:
            break
    return IntegralPath(X.X.times, prev, {"method": "rough", "level": label, "error": gap})


def young_integral(
    F: CadlagPath, B: CadlagPath, p: float = 2.5, q: float = 1.5, cap: int = EXACT_CAP
) -> IntegralPath:
    """∫ F dB as left-point sums on the full grid (exact for step paths).

    Requires q < 2 for B and 1/p + 1/q > 1; the measured variations are
    reported in ``meta`` (None when the grid exceeds ``cap``).
    """
    _check_grid(F, B)
    if not q < 2:
        raise ContractError("Young integration needs an integrator with q < 2")
    if not 1.0 / p + 1.0 / q > 1.0:
        raise ContractError("Young integration needs 1/p + 1/q > 1")
    out = left_point_integral(F, B)
    meta = {"method": "young", "level": "full", "p": p, "q": q}
    try:
        meta["integrand_pvar"] = p_variation(F, p, cap=cap)
        meta["integrator_qvar"] = p_variation(B, q, cap=cap)
    except ResolutionExceeded:
        meta["integrand_pvar"] = meta["integrator_qvar"] = None
    return IntegralPath(out.times, out.values, meta)


# ---------------------------------------------------------------------------
# rough Itô formula


def _scalar_field_derivs(f: C2Function, X: np.ndarray):
    val = f(X).reshape(X.shape[0], -1)
    if val.shape[1] != 1:
        raise DomainError("the Itô check needs a scalar field")
    return val[:, 0], f.grad(X)[:, 0, :], f.hess(X)[:, 0, :, :]


def ito_terms(f: C2Function, S: CadlagPath, seq=None, n=None, jumps=None) -> dict[str, np.ndarray]:
    """Running terms of the rough Itô formula at every grid time.

    ``first`` is the left-point ∫Df(S)dS, ``second`` is ½∫D²f(S):d⟨S⟩ with
    left-point weights on right-closed bracket increments, ``jump`` the
    compensation over the declared jump indices.
    """
    part, _ = _resolve(seq, S, n)
    val, g, h = _scalar_field_derivs(f, S.values)
    first = _left_point_running(g, S.values, part)
    idx = part.indices
    inc = np.diff(S.values[idx], axis=0)
    per = 0.5 * np.einsum("kab,ka,kb->k", h[idx[:-1]], inc, inc)
    cum = np.concatenate([[0.0], np.cumsum(per)])
    bs = part.block_starts()
    pin = S.values - S.values[bs]
    second = cum[part.block_ids()] + 0.5 * np.einsum("jab,ja,jb->j", h[bs], pin, pin)
    jump = np.zeros(S.times.size)
    if jumps is not None and len(jumps):
        ks = np.asarray(sorted(set(int(k) for k in jumps)), dtype=np.int64)
        if ks.min() < 1 or ks.max() >= S.times.size:
            raise DomainError("jump indices must lie in 1..N")
        dS = S.values[ks] - S.values[ks - 1]
        comp = (
            val[ks]
            - val[ks - 1]
            - np.einsum("ka,ka->k", g[ks - 1], dS)
            - 0.5 * np.einsum("kab,ka,kb->k", h[ks - 1], dS, dS)
        )
        marks = np.zeros(S.times.size)
        marks[ks] = comp
        jump = np.cumsum(marks)
    return {"value": val - val[0], "first": first, "second": second, "jump": jump}


def rough_ito_defect(f: C2Function, S: CadlagPath, seq=None, n=None, jumps=None) -> float:
    """sup_t |f(S_t) − f(S_0) − ∫Df dS − ½∫D²f d[S] − jump compensation|."""
    terms = ito_terms(f, S, seq, n, jumps)
    return float(np.abs(terms["value"] - terms["first"] - terms["second"] - terms["jump"]).max())
