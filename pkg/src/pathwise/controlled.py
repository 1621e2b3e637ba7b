"""Controlled paths (F, F') and the smooth / path-dependent builders that produce them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .errors import ConfigError, ContractError, DomainError, ResolutionExceeded
from .paths import CadlagPath, rng_for
from .variation import EXACT_CAP, p_variation

FD_STEP = 1e-5
FD_HESS_STEP = 1e-4


def _rows(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


@dataclass(frozen=True, eq=False)
class C2Function:
    """Vector field f: R^l -> R^m with optional analytic derivatives.

    Callbacks are vectorized over rows: ``value`` maps (M, l) to (M, m),
    ``gradient`` to (M, m, l) and ``hessian`` to (M, m, l, l). Missing
    derivatives fall back to central finite differences.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    c2b_norm: float | None = None
    name: str = "custom"

    def __call__(self, x) -> np.ndarray:
        X, flat = _rows(x)
        out = np.asarray(self.value(X), dtype=float).reshape(X.shape[0], -1)
        return out[0] if flat else out

    def grad(self, x) -> np.ndarray:
        X, flat = _rows(x)
        if self.gradient is not None:
            out = np.asarray(self.gradient(X), dtype=float)
        else:
            out = _fd_jacobian(self.__call__, X, FD_STEP)
        return out[0] if flat else out

    def hess(self, x) -> np.ndarray:
        X, flat = _rows(x)
        if self.hessian is not None:
            out = np.asarray(self.hessian(X), dtype=float)
        elif self.gradient is not None:
            out = _fd_jacobian(self.grad, X, FD_STEP)
        else:
            out = _fd_jacobian(lambda y: _fd_jacobian(self.__call__, y, FD_HESS_STEP), X, FD_HESS_STEP)
        return out[0] if flat else out

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.gradient is not None and self.hessian is not None

    def norm_on(self, points) -> tuple[float, bool]:
        """‖f‖_{C²_b}: the declared value, or a sampled estimate flagged ``True``."""
        if self.c2b_norm is not None:
            return float(self.c2b_norm), False
        X, _ = _rows(points)
        v = np.sqrt(np.sum(self(X) ** 2, axis=1)).max()
        g = np.sqrt(np.sum(self.grad(X) ** 2, axis=(1, 2))).max()
        h = np.sqrt(np.sum(self.hess(X) ** 2, axis=(1, 2, 3))).max()
        return float(v + g + h), True

    def check_derivatives(self, points) -> dict[str, float]:
        """Relative mismatch between declared derivatives and finite differences."""
        X, _ = _rows(points)
        out = {}
        if self.gradient is not None:
            fd = _fd_jacobian(self.__call__, X, FD_STEP)
            out["gradient"] = _rel_err(self.grad(X), fd)
        if self.hessian is not None:
            fd = _fd_jacobian(self.grad, X, FD_STEP)
            out["hessian"] = _rel_err(self.hess(X), fd)
        return out

    def __add__(self, other: "C2Function") -> "C2Function":
        return _combine(self, other, 1.0)

    def __sub__(self, other: "C2Function") -> "C2Function":
        return _combine(self, other, -1.0)

    def scaled(self, lam: float) -> "C2Function":
        norm = None if self.c2b_norm is None else abs(lam) * self.c2b_norm
        return C2Function(
            lambda X: lam * self(X),
            None if self.gradient is None else (lambda X: lam * self.grad(X)),
            None if self.hessian is None else (lambda X: lam * self.hess(X)),
            norm,
            f"{lam}*{self.name}",
        )


def _combine(f: C2Function, g: C2Function, sign: float) -> C2Function:
    analytic_g = f.gradient is not None and g.gradient is not None
    analytic_h = f.hessian is not None and g.hessian is not None
    return C2Function(
        lambda X: f(X) + sign * g(X),
        (lambda X: f.grad(X) + sign * g.grad(X)) if analytic_g else None,
        (lambda X: f.hess(X) + sign * g.hess(X)) if analytic_h else None,
        None,
        f"({f.name}{'+' if sign > 0 else '-'}{g.name})",
    )


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.abs(b).max()), 1.0)
    return float(np.abs(a - b).max() / scale)


def _fd_jacobian(fun, X: np.ndarray, step: float) -> np.ndarray:
    base = np.asarray(fun(X))
    jac = np.empty(base.shape + (X.shape[1],))
    for k in range(X.shape[1]):
        h = step * (1.0 + np.abs(X[:, k]))
        up, dn = X.copy(), X.copy()
        up[:, k] += h
        dn[:, k] -= h
        shape = (-1,) + (1,) * (base.ndim - 1)
        jac[..., k] = (np.asarray(fun(up)) - np.asarray(fun(dn))) / (2 * h.reshape(shape))
    return jac


# ---------------------------------------------------------------------------
# built-in fields


def _diag_field(dim: int, f, df, d2f, norm, name) -> C2Function:
    """Componentwise field x^a -> f(x^a) acting on the first ``dim`` inputs."""

    def value(X):
        return f(X[:, :dim])

    def gradient(X):
        M, l = X.shape
        out = np.zeros((M, dim, l))
        out[:, np.arange(dim), np.arange(dim)] = df(X[:, :dim])
        return out

    def hessian(X):
        M, l = X.shape
        out = np.zeros((M, dim, l, l))
        r = np.arange(dim)
        out[:, r, r, r] = d2f(X[:, :dim])
        return out

    return C2Function(value, gradient, hessian, norm, name)


def builtin_function(name: str, dim: int, **params) -> C2Function:
    """Registry: const, linear, quadratic, entropy_gradient, tanh, sin, softmax."""
    if name == "const":
        c = float(params.get("c", 1.0))
        return C2Function(
            lambda X: np.full((X.shape[0], dim), c),
            lambda X: np.zeros((X.shape[0], dim, X.shape[1])),
            lambda X: np.zeros((X.shape[0], dim, X.shape[1], X.shape[1])),
            abs(c) * np.sqrt(dim),
            "const",
        )
    if name == "linear":
        M = np.asarray(params.get("matrix", np.eye(dim)), dtype=float).reshape(dim, dim)

        def gradient(X):
            out = np.zeros((X.shape[0], dim, X.shape[1]))
            out[:, :, :dim] = M
            return out

        return C2Function(
            lambda X: X[:, :dim] @ M.T,
            gradient,
            lambda X: np.zeros((X.shape[0], dim, X.shape[1], X.shape[1])),
            None,
            "linear",
        )
    if name == "quadratic":
        return _diag_field(dim, lambda x: x**2, lambda x: 2 * x, lambda x: np.full_like(x, 2.0), None, "quadratic")
    if name == "entropy_gradient":

        def f(x):
            if np.any(x <= 0):
                raise DomainError("entropy gradient needs positive inputs")
            return -np.log(x) - 1.0

        return _diag_field(dim, f, lambda x: -1.0 / x, lambda x: 1.0 / x**2, None, "entropy_gradient")
    if name == "tanh":
        scale = float(params.get("scale", 1.0))
        th = lambda x: np.tanh(scale * x)
        # sup|tanh| + sup|sech²|·s + sup|2 sech² tanh|·s², per component
        norm = np.sqrt(dim) * (1.0 + scale + 4.0 / (3.0 * np.sqrt(3.0)) * scale**2)
        return _diag_field(
            dim,
            th,
            lambda x: scale * (1 - th(x) ** 2),
            lambda x: -2 * scale**2 * th(x) * (1 - th(x) ** 2),
            norm,
            "tanh",
        )
    if name == "sin":
        return _diag_field(dim, np.sin, np.cos, lambda x: -np.sin(x), 3.0 * np.sqrt(dim), "sin")
    if name == "softmax":

        def value(X):
            z = X[:, :dim] - X[:, :dim].max(axis=1, keepdims=True)
            e = np.exp(z)
            return e / e.sum(axis=1, keepdims=True)

        def gradient(X):
            s = value(X)
            out = np.zeros((X.shape[0], dim, X.shape[1]))
            out[:, :, :dim] = s[:, :, None] * (np.eye(dim)[None] - s[:, None, :])
            return out

        return C2Function(value, gradient, None, None, "softmax")
    raise ConfigError(f"unknown built-in function {name!r}")


# ---------------------------------------------------------------------------
# controlled paths


@dataclass(frozen=True, eq=False)
class ControlledPath:
    """(F, F') controlled by Z: F_{s,t} = F'_s Z_{s,t} + R_{s,t}.

    ``Fprime`` has shape (N+1, m, d) with m = F.dim and d = Z.dim.
    """

    F: CadlagPath
    Fprime: np.ndarray
    Z: CadlagPath
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        fp = np.asarray(self.Fprime, dtype=float)
        if fp.ndim == 2:
            fp = fp[:, :, None] if self.Z.dim == 1 else fp[:, None, :]
        if fp.shape != (self.F.times.size, self.F.dim, self.Z.dim):
            raise DomainError(f"Gubinelli derivative must have shape (N+1, {self.F.dim}, {self.Z.dim})")
        if not np.array_equal(self.F.times, self.Z.times):
            raise DomainError("F and its controller must share a grid")
        if not np.all(np.isfinite(fp)):
            raise DomainError("Gubinelli derivative must be finite")
        fp.setflags(write=False)
        object.__setattr__(self, "Fprime", fp)

    @property
    def times(self) -> np.ndarray:
        return self.F.times

    def remainder(self, ii, jj) -> np.ndarray:
        ii = np.asarray(ii, dtype=np.int64)
        jj = np.asarray(jj, dtype=np.int64)
        F, Z = self.F.values, self.Z.values
        return F[jj] - F[ii] - np.einsum("...ab,...b->...a", self.Fprime[ii], Z[jj] - Z[ii])

    def jump_indices(self) -> np.ndarray:
        return self.F.jump_indices()

    def __add__(self, other: "ControlledPath") -> "ControlledPath":
        return ControlledPath(self.F + other.F, self.Fprime + other.Fprime, self.Z)

    def scaled(self, lam: float) -> "ControlledPath":
        return ControlledPath(self.F.scaled(lam), lam * self.Fprime, self.Z)


def controlled_from_function(f: C2Function, S: CadlagPath, A: CadlagPath | None = None) -> ControlledPath:
    """F_t = f(S_t, A_t) with Gubinelli derivative D_S f(S_t, A_t)."""
    X = S.values if A is None else np.hstack([S.values, A.values])
    F = f(X)
    Fp = f.grad(X)[:, :, : S.dim]
    norm, estimated = f.norm_on(X)
    return ControlledPath(
        CadlagPath(S.times, F),
        Fp,
        S,
        {"function": f.name, "c2b_norm": norm, "norm_estimated": estimated},
    )


@dataclass(frozen=True, eq=False)
class DupireFunctional:
    """Non-anticipative functional F(t, S) on a grid.

    Callbacks receive ``(k, times, values)`` with the whole sampled path and must
    only read rows 0..k; ``vertical_gradient`` returns the (m, d) matrix ∇_x F.
    The horizontal derivative is kept for documentation and is not used.
    """

    value: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    vertical_gradient: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    horizontal: Callable | None = None
    lipschitz: float | None = None
    name: str = "dupire"


def non_anticipativity_probe(F: DupireFunctional, S: CadlagPath, n_probes: int = 8, seed: int = 0) -> float:
    """Largest change of F(t, ·) or ∇_x F(t, ·) when the path is altered after t."""
    rng = rng_for(seed, 9000)
    n = S.times.size
    ks = np.unique(np.linspace(0, n - 2, min(n_probes, n - 1)).round().astype(int))
    worst = 0.0
    for k in ks:
        mutated = S.values.copy()
        mutated[k + 1 :] += rng.standard_normal(mutated[k + 1 :].shape) + 1.0
        for cb in (F.value, F.vertical_gradient):
            a = np.asarray(cb(int(k), S.times, S.values), dtype=float)
            b = np.asarray(cb(int(k), S.times, mutated), dtype=float)
            worst = max(worst, float(np.abs(a - b).max(initial=0.0)))
    return worst


def controlled_from_dupire(F: DupireFunctional, S: CadlagPath, r: float = 1.25, tol: float = 1e-12) -> ControlledPath:
    gap = non_anticipativity_probe(F, S)
    if gap > tol:
        raise ContractError(f"functional {F.name!r} looks ahead: probe changed output by {gap:.3g}")
    vals = np.array([np.atleast_1d(F.value(k, S.times, S.values)) for k in range(S.times.size)], dtype=float)
    grads = np.array([np.atleast_2d(F.vertical_gradient(k, S.times, S.values)) for k in range(S.times.size)])
    ctrl = ControlledPath(CadlagPath(S.times, vals), grads, S, {"functional": F.name})
    info = {"functional": F.name, "probe_gap": gap}
    try:
        info["remainder_rvar"] = remainder_variation(ctrl, r)
        info["remainder_r"] = r
    except ResolutionExceeded as exc:
        info["remainder_rvar"] = None
        info["remainder_note"] = str(exc)
    return ControlledPath(ctrl.F, ctrl.Fprime, S, info)


def add_finite_rvar(ctrl: ControlledPath, gamma: CadlagPath, r: float, cap: int = EXACT_CAP) -> ControlledPath:
    """(F + γ, F'): γ has finite r-variation and zero Gubinelli derivative."""
    if gamma.dim != ctrl.F.dim:
        raise DomainError("γ must have the same dimension as F")
    rvar = p_variation(gamma, r, cap=cap)
    info = dict(ctrl.info, gamma_rvar=rvar, gamma_r=r)
    return ControlledPath(ctrl.F + gamma, ctrl.Fprime, ctrl.Z, info)


def remainder_variation(ctrl: ControlledPath, r: float, indices=None, cap: int = EXACT_CAP) -> float:
    """‖R^F‖_r over the grid (or an index subset)."""
    idx = np.arange(ctrl.times.size) if indices is None else np.unique(np.asarray(indices, dtype=np.int64))
    if idx.size > cap:
        raise ResolutionExceeded(int(idx.size), cap)
    if idx.size < 2:
        return 0.0
    F = np.ascontiguousarray(ctrl.F.values[idx])
    Fp = np.ascontiguousarray(ctrl.Fprime[idx])
    Z = np.ascontiguousarray(ctrl.Z.values[idx])
    return float(K.dp_remainder(F, Fp, Z, float(r)) ** (1.0 / r))


def controlled_norm(
    ctrl: ControlledPath, q: float, r: float, indices=None, include_value: bool = False, cap: int = EXACT_CAP
) -> float:
    """|F'_0| + ‖F'‖_q + ‖R^F‖_r, plus |F_0| when ``include_value``."""
    fp_path = CadlagPath(ctrl.times, ctrl.Fprime.reshape(ctrl.times.size, -1))
    total = (
        float(np.linalg.norm(ctrl.Fprime[0]))
        + p_variation(fp_path, q, indices=indices, cap=cap)
        + remainder_variation(ctrl, r, indices=indices, cap=cap)
    )
    if include_value:
        total += float(np.linalg.norm(ctrl.F.values[0]))
    return total
