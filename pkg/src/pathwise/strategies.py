"""Trading strategies on price paths: capital processes, functionally generated
and mixture portfolios, and constructions on the market-weight simplex."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .controlled import C2Function, ControlledPath, controlled_from_function
from .errors import ConfigError, ContractError, DomainError
from .integration import IntegralPath, _left_point_running, _resolve, compensated_rough_integral
from .partitions import NestedPartitionSequence, Partition
from .paths import CadlagPath
from .roughpath import RoughPathTriple, area_n, limit_triple, rough_seminorm
from .variation import p_variation

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Strategy:
    ctrl: ControlledPath
    label: str = "strategy"
    report: dict = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return self.ctrl.F.values

    def admissibility(self, seq: NestedPartitionSequence | Partition | None) -> dict:
        """Jump times of φ must lie in the union of the partition levels."""
        jumps = self.ctrl.jump_indices()
        if seq is None:
            covered = np.arange(self.ctrl.times.size)
        elif isinstance(seq, Partition):
            covered = seq.indices
        else:
            covered = seq.union_indices()
        missing = np.setdiff1d(jumps, covered)
        return {
            "jumps_covered": bool(missing.size == 0),
            "uncovered_jump_times": self.ctrl.times[missing].tolist(),
        }

    def __add__(self, other: "Strategy") -> "Strategy":
        return Strategy(self.ctrl + other.ctrl, f"{self.label}+{other.label}")

    def scaled(self, lam: float) -> "Strategy":
        return Strategy(self.ctrl.scaled(lam), f"{lam}*{self.label}")


def constant_strategy(S: CadlagPath, weights) -> Strategy:
    w = np.broadcast_to(np.asarray(weights, dtype=float), (S.dim,))
    F = CadlagPath(S.times, np.broadcast_to(w, S.values.shape))
    return Strategy(ControlledPath(F, np.zeros((S.times.size, S.dim, S.dim)), S), "constant")


def functionally_generated(f: C2Function, S: CadlagPath, A: CadlagPath | None = None) -> Strategy:
    """φ_t = f(S_t, A_t), φ' = D_S f(S_t, A_t)."""
    ctrl = controlled_from_function(f, S, A)
    if ctrl.F.dim != S.dim:
        raise DomainError("strategy field must be R^d-valued")
    return Strategy(ctrl, f.name, {"class": "G2", **ctrl.info})


def _require_admissible(strategy: Strategy, seq) -> dict:
    adm = strategy.admissibility(seq)
    if not adm["jumps_covered"]:
        raise ContractError(f"strategy jumps outside the partitions at t = {adm['uncovered_jump_times']}")
    return adm


def capital_process(
    strategy: Strategy,
    S: CadlagPath,
    seq: NestedPartitionSequence,
    n=None,
    cross_check: bool = True,
) -> IntegralPath:
    """Left-point capital at level n, cross-checked against the compensated
    rough integral with the finest area."""
    adm = _require_admissible(strategy, seq)
    part, label = _resolve(seq, S, n)
    vals = _left_point_running(strategy.positions, S.values, part)
    meta = {"method": "left_point", "level": label, "admissibility": adm}
    if cross_check:
        X = limit_triple(S, seq)
        G = ControlledPath(S, np.broadcast_to(np.eye(S.dim), (S.times.size, S.dim, S.dim)), S)
        comp = compensated_rough_integral(strategy.ctrl, G, X, seq, local_estimates=False)
        meta["compensated_terminal"] = float(comp.terminal)
        meta["compensated_error"] = comp.meta["error"]
        meta["gap"] = float(abs(vals[-1] - comp.terminal))
    return IntegralPath(S.times, vals, meta)


def stability_gap(
    f: C2Function,
    f_tilde: C2Function,
    S: CadlagPath,
    seq: NestedPartitionSequence,
    A: CadlagPath | None = None,
    n=None,
    p: float = 2.5,
    var_cap: int = 2048,
) -> dict:
    """lhs = |V^f_T − V^f~_T| and the factor
    ‖f−f~‖_{C²_b}(1+‖S‖_p²+‖A‖_1)(1+‖S‖_p)‖S‖_{rough,p}; ratio = lhs / factor."""
    part, _ = _resolve(seq, S, n)
    phi = functionally_generated(f, S, A)
    psi = functionally_generated(f_tilde, S, A)
    v1 = _left_point_running(phi.positions, S.values, part)[-1]
    v2 = _left_point_running(psi.positions, S.values, part)[-1]
    lhs = float(abs(v1 - v2))
    X = S.values if A is None else np.hstack([S.values, A.values])
    norm, estimated = (f - f_tilde).norm_on(X)
    coarse = seq.largest_level_within(var_cap)
    sp = p_variation(S, p, indices=coarse.indices)
    a1 = 0.0 if A is None else p_variation(A, 1.0, cap=10**9)
    rough = rough_seminorm(limit_triple(S, seq), p, indices=coarse.indices)
    factor = norm * (1 + sp**2 + a1) * (1 + sp) * rough
    return {
        "lhs": lhs,
        "bound_factor": float(factor),
        "ratio": float(lhs / factor) if factor > 0 else 0.0,
        "norm_difference": norm,
        "norm_estimated": estimated,
        "coarsened": not coarse.is_full(),
    }


@dataclass(frozen=True)
class MixingMeasure:
    atoms: tuple[C2Function, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.atoms) != len(self.weights) or not self.atoms:
            raise ConfigError("mixing measure needs one weight per atom")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
            raise ConfigError("mixing weights must be nonnegative and sum to 1")


def cover_portfolio(
    measure: MixingMeasure, S: CadlagPath, A: CadlagPath | None, seq, n=None
) -> tuple[Strategy, IntegralPath]:
    """φ^ν = Σ_j w_j φ^{f_j} and its capital, with the mixture identity checked."""
    part, label = _resolve(seq, S, n)
    strategies = [functionally_generated(f, S, A) for f in measure.atoms]
    pos = sum(w * s.positions for w, s in zip(measure.weights, strategies))
    der = sum(w * s.ctrl.Fprime for w, s in zip(measure.weights, strategies))
    mix = Strategy(ControlledPath(CadlagPath(S.times, pos), der, S), "cover")
    V = _left_point_running(pos, S.values, part)
    parts = np.array([_left_point_running(s.positions, S.values, part) for s in strategies])
    combo = np.tensordot(np.asarray(measure.weights), parts, axes=1)
    scale = max(float(np.abs(combo).max()), 1e-300)
    meta = {
        "method": "left_point",
        "level": label,
        "mixture_defect": float(np.abs(V - combo).max() / scale),
        "atom_terminals": parts[:, -1].tolist(),
    }
    return mix, IntegralPath(S.times, V, meta)


# ---------------------------------------------------------------------------
# market-weight constructions


def _check_simplex(mu: CadlagPath) -> None:
    if np.any(mu.values <= 0) or np.abs(mu.values.sum(axis=1) - 1).max() > 1e-9:
        raise DomainError("market weights must lie in the open simplex")


def self_financing_from_theta(
    theta: ControlledPath, mu: CadlagPath, C: float, seq, n=None
) -> Strategy:
    """φ^i = θ^i − Q^θ − C with Q^θ = V^θ − V^θ_0 − ∫θ dμ (left-point at level n)."""
    _check_simplex(mu)
    part, label = _resolve(seq, mu, n)
    th = theta.F.values
    V = np.einsum("ja,ja->j", th, mu.values)
    Q = V - V[0] - _left_point_running(th, mu.values, part)
    phi = th - Q[:, None] - C
    # d(θ·μ) − θ dμ has Gubinelli derivative μ^T θ'
    q_prime = np.einsum("ja,jab->jb", mu.values, theta.Fprime)
    phi_prime = theta.Fprime - q_prime[:, None, :]
    ctrl = ControlledPath(CadlagPath(mu.times, phi), phi_prime, mu)
    Vphi = np.einsum("ja,ja->j", phi, mu.values)
    gain = _left_point_running(phi, mu.values, part)
    defect = float(np.abs(Vphi - Vphi[0] - gain).max())
    scale = max(float(np.abs(th).max()), 1.0)
    return Strategy(
        ctrl,
        "self_financing",
        {"Q": Q, "C": C, "level": label, "self_financing_defect": defect, "scale": scale},
    )


@dataclass(frozen=True, eq=False)
class GeneratingFunction:
    """Scalar G on the open simplex with vectorized value/gradient/Hessian."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    concave_declared: bool = False
    positive_declared: bool = False
    name: str = "G"

    def _rows(self, x):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        if np.any(X <= 0) or np.any(X >= 1):
            raise DomainError("generating functions are defined on the open simplex")
        return X

    def G(self, x) -> np.ndarray:
        return np.asarray(self.value(self._rows(x)), dtype=float).reshape(-1)

    def DG(self, x) -> np.ndarray:
        return np.asarray(self.gradient(self._rows(x)), dtype=float)

    def D2G(self, x) -> np.ndarray:
        if self.hessian is None:
            raise ContractError(f"{self.name} has no Hessian; only the definition route is available")
        return np.asarray(self.hessian(self._rows(x)), dtype=float)

    def check_positive(self, x, eps: float = 0.0) -> None:
        if self.positive_declared and np.any(self.G(x) <= eps):
            raise DomainError(f"{self.name} must stay bounded away from zero")


def entropy() -> GeneratingFunction:
    """Gibbs entropy H(x) = −Σ x_i log x_i."""
    return GeneratingFunction(
        lambda X: -np.sum(X * np.log(X), axis=1),
        lambda X: -np.log(X) - 1.0,
        lambda X: np.einsum("ki,ij->kij", -1.0 / X, np.eye(X.shape[1])),
        concave_declared=True,
        positive_declared=True,
        name="entropy",
    )


def quadratic(c: float) -> GeneratingFunction:
    """Q^{(c)}(x) = c − Σ x_i²."""
    return GeneratingFunction(
        lambda X: c - np.sum(X**2, axis=1),
        lambda X: -2.0 * X,
        lambda X: np.broadcast_to(-2.0 * np.eye(X.shape[1]), (X.shape[0], X.shape[1], X.shape[1])),
        concave_declared=True,
        positive_declared=c > 1,
        name=f"quadratic(c={c})",
    )


def linear_generator(weights) -> GeneratingFunction:
    w = np.asarray(weights, dtype=float)
    return GeneratingFunction(
        lambda X: X @ w,
        lambda X: np.broadcast_to(w, X.shape),
        lambda X: np.zeros((X.shape[0], X.shape[1], X.shape[1])),
        name="linear",
    )


def gamma_path(G: GeneratingFunction, mu: CadlagPath, seq=None, n=None, jumps=None) -> dict:
    """Γ^G by definition, G(μ_0) − G(μ_t) + ∫DG(μ)dμ, and by the Hessian route.

    The Hessian route is −½∫D²G(μ):d⟨μ⟩ (left-point weights on the bracket),
    minus the jump compensation at declared jump indices. It is skipped
    (``None``) when G has no Hessian.
    """
    _check_simplex(mu)
    part, label = _resolve(seq, mu, n)
    g = G.G(mu.values)
    dg = G.DG(mu.values)
    definition = g[0] - g + _left_point_running(dg, mu.values, part)
    out = {"times": mu.times, "definition": definition, "level": label, "hessian": None, "route_gap": None}
    if G.hessian is None:
        return out
    h = G.D2G(mu.values)
    idx = part.indices
    inc = np.diff(mu.values[idx], axis=0)
    per = -0.5 * np.einsum("kab,ka,kb->k", h[idx[:-1]], inc, inc)
    cum = np.concatenate([[0.0], np.cumsum(per)])
    bs = part.block_starts()
    pin = mu.values - mu.values[bs]
    hess = cum[part.block_ids()] - 0.5 * np.einsum("jab,ja,jb->j", h[bs], pin, pin)
    if jumps is not None and len(jumps):
        ks = np.asarray(sorted(set(int(k) for k in jumps)), dtype=np.int64)
        dm = mu.values[ks] - mu.values[ks - 1]
        comp = g[ks] - g[ks - 1] - np.einsum("ka,ka->k", dg[ks - 1], dm) - 0.5 * np.einsum(
            "kab,ka,kb->k", h[ks - 1], dm, dm
        )
        marks = np.zeros(mu.times.size)
        marks[ks] = comp
        hess = hess - np.cumsum(marks)
    out["hessian"] = hess
    out["route_gap"] = float(np.abs(hess - definition).max())
    return out


def _weights(mu: np.ndarray, phi: np.ndarray, what: str, tol: float = 1e-14) -> np.ndarray:
    denom = np.einsum("ja,ja->j", mu, phi)
    if np.any(np.abs(denom) <= tol):
        k = int(np.argmin(np.abs(denom)))
        raise DomainError(f"degenerate {what} weights: Σ μ^j φ^j = {denom[k]:.3g} at grid index {k}")
    return mu * phi / denom[:, None]


def generated_strategies(G: GeneratingFunction, mu: CadlagPath, seq=None, n=None) -> dict:
    """Additive and multiplicative strategies generated by G, with their weights."""
    _check_simplex(mu)
    part, label = _resolve(seq, mu, n)
    m = mu.values
    dg = G.DG(m)
    g = G.G(m)
    C0 = float(m[0] @ dg[0] - g[0])
    hess = G.D2G(m) if G.hessian is not None else np.zeros(m.shape + (m.shape[1],))
    theta = ControlledPath(CadlagPath(mu.times, dg), hess, mu)
    additive = self_financing_from_theta(theta, mu, C0, part, label)
    pi = _weights(m, additive.positions, "additive")

    G.check_positive(m)
    if np.any(g <= 0):
        raise DomainError("multiplicative route needs G bounded away from zero")
    gam = gamma_path(G, mu, part, label)["definition"]
    # left-point Stieltjes sums of dΓ / G(μ) over the partition blocks
    idx = part.indices
    per = np.diff(gam[idx]) / g[idx[:-1]]
    cum = np.concatenate([[0.0], np.cumsum(per)])
    bs = part.block_starts()
    expo = cum[part.block_ids()] + (gam - gam[bs]) / g[bs]
    growth = np.exp(expo)
    eta_vals = dg * growth[:, None]
    eta = ControlledPath(CadlagPath(mu.times, eta_vals), hess * growth[:, None, None], mu)
    multiplicative = self_financing_from_theta(eta, mu, C0, part, label)
    big_pi_num = dg - np.einsum("ja,ja->j", dg, m)[:, None]
    Pi = m * (1.0 + big_pi_num / g[:, None])
    pi_mult = _weights(m, multiplicative.positions, "multiplicative")
    return {
        "C0": C0,
        "additive": additive,
        "pi": pi,
        "multiplicative": multiplicative,
        "pi_multiplicative": pi_mult,
        "Pi": Pi,
        "gamma": gam,
        "level": label,
        "Pi_gap": float(np.abs(pi_mult - Pi).max()),
    }
