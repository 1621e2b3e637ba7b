"""Cadlag step paths on finite grids and the stochastic models that feed them.

A :class:`CadlagPath` stores samples ``values[k]`` at ``times[k]`` and is read as
the right-continuous step function equal to ``values[k]`` on ``[t_k, t_{k+1})``.
Every generator returns such a path on the uniform grid ``k * T / n_steps``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numba
import numpy as np

from .errors import ConfigError, DomainError

MODELS = ("brownian", "gbm", "merton", "mixed_bs", "deterministic")

# RNG stream offsets; every (seed, stream) pair is an independent Philox key.
_STREAM_W = 0
_STREAM_FBM = 1000
_STREAM_JUMP = 2000


@dataclass(frozen=True, eq=False)
class CadlagPath:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise DomainError("times must be a nonempty 1-d array")
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != times.size:
            raise DomainError("values must have one row per grid time")
        if values.shape[1] < 1:
            raise DomainError("path dimension must be positive")
        if times[0] != 0.0:
            raise DomainError("first grid time must be 0")
        if np.any(np.diff(times) <= 0):
            raise DomainError("grid times must be strictly increasing")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(times))):
            raise DomainError("path values must be finite")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return self.times.size

    def _check_time(self, t: float) -> None:
        if not (0.0 <= t <= self.horizon):
            raise DomainError(f"t={t} outside [0, {self.horizon}]")

    def eval(self, t: float) -> np.ndarray:
        self._check_time(t)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[k].copy()

    def eval_left(self, t: float) -> np.ndarray:
        """Left limit ``S_{t-}``; equals ``values[0]`` at time 0."""
        self._check_time(t)
        k = int(np.searchsorted(self.times, t, side="left"))
        if k < self.times.size and self.times[k] == t:
            return self.values[max(k - 1, 0)].copy()
        return self.values[k - 1].copy()

    def index_of(self, t: float) -> int:
        """Grid index of the grid time ``t`` (tolerant to float round-trips)."""
        k = int(np.searchsorted(self.times, t))
        for j in (k - 1, k):
            if 0 <= j < self.times.size and math.isclose(
                self.times[j], t, rel_tol=1e-12, abs_tol=1e-12
            ):
                return j
        raise DomainError(f"{t} is not a grid time")

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def jump_indices(self) -> np.ndarray:
        """Grid indices k >= 1 with values[k] != values[k-1]."""
        return np.flatnonzero(np.any(self.values[1:] != self.values[:-1], axis=1)) + 1

    def component(self, i: int) -> "CadlagPath":
        return CadlagPath(self.times, self.values[:, i])

    def with_values(self, values) -> "CadlagPath":
        return CadlagPath(self.times, values)

    def __add__(self, other: "CadlagPath") -> "CadlagPath":
        _require_same_grid(self, other)
        return CadlagPath(self.times, self.values + other.values)

    def __sub__(self, other: "CadlagPath") -> "CadlagPath":
        _require_same_grid(self, other)
        return CadlagPath(self.times, self.values - other.values)

    def scaled(self, c: float) -> "CadlagPath":
        return CadlagPath(self.times, c * self.values)

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time"] + [f"x{i + 1}" for i in range(self.dim)])
        for t, row in zip(self.times, self.values):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        text = buf.getvalue()
        if target is not None:
            Path(target).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "CadlagPath":
        text = Path(source).read_text() if not _looks_like_csv(source) else source
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0].strip() != "time":
            raise DomainError("path CSV must start with header 'time,x1,...,xd'")
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
        if data.ndim != 2 or data.shape[1] < 2:
            raise DomainError("path CSV needs at least one value column")
        return cls(data[:, 0], data[:, 1:])


def _looks_like_csv(source) -> bool:
    return isinstance(source, str) and "\n" in source


def _require_same_grid(a: CadlagPath, b: CadlagPath) -> None:
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise DomainError("paths live on different grids")


def uniform_grid(horizon: float, n_steps: int) -> np.ndarray:
    times = np.arange(n_steps + 1, dtype=float) * (horizon / n_steps)
    times[-1] = horizon
    return times


def eval_path(path: CadlagPath, t: float) -> np.ndarray:
    return path.eval(t)


def eval_left(path: CadlagPath, t: float) -> np.ndarray:
    return path.eval_left(t)


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class GeneratorConfig:
    model: str = "brownian"
    horizon: float = 1.0
    n_steps: int = 1024
    seed: int = 0
    dim: int = 1
    s0: float = 1.0
    sigma: float = 1.0
    mu_drift: float = 0.0
    # mixed Black-Scholes exponent: sigma W + eta Y + nu t + frac_drift t^{2H}
    eta: float = 0.0
    nu: float = 0.0
    frac_drift: float = 0.0
    hurst: float = 0.5
    jump_intensity: float = 0.0
    jump_mean: float = 0.0
    jump_std: float = 0.1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        if not (isinstance(self.n_steps, (int, np.integer)) and self.n_steps >= 1):
            raise ConfigError("n_steps must be an integer >= 1")
        if not self.horizon > 0:
            raise ConfigError("horizon T must be positive")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        if not 0.0 < self.hurst < 1.0:
            raise ConfigError("Hurst index must lie in (0, 1)")
        if self.model in ("gbm", "merton", "mixed_bs") and self.s0 <= 0:
            raise ConfigError("s0 must be positive")
        if self.model in ("gbm", "merton", "mixed_bs") and self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if self.model == "mixed_bs" and self.eta < 0:
            raise ConfigError("eta must be nonnegative")
        if self.jump_intensity < 0 or self.jump_std < 0:
            raise ConfigError("jump intensity and jump std must be nonnegative")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "GeneratorConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        aliases = {"T": "horizon", "steps": "n_steps", "H": "hurst", "lambda": "jump_intensity"}
        kwargs = {}
        for key, raw in mapping.items():
            name = aliases.get(key, key).replace("-", "_")
            if name not in kinds:
                continue
            kwargs[name] = _coerce(name, kinds[name], raw)
        return cls(**kwargs)

    def replace(self, **changes) -> "GeneratorConfig":
        return replace(self, **changes)


def _coerce(name, kind, raw):
    try:
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_kv_config(source) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    text = Path(source).read_text() if not _looks_like_csv(source) else source
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def rng_for(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed on (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def brownian_values(seed: int, n_steps: int, horizon: float, dim: int) -> np.ndarray:
    dt = horizon / n_steps
    out = np.zeros((n_steps + 1, dim))
    for i in range(dim):
        z = rng_for(seed, _STREAM_W + i).standard_normal(n_steps)
        out[1:, i] = np.cumsum(z * math.sqrt(dt))
    return out


def generate(config: GeneratorConfig) -> CadlagPath:
    c = config
    times = uniform_grid(c.horizon, c.n_steps)
    t = times[:, None]
    if c.model == "deterministic":
        return CadlagPath(times, np.broadcast_to(c.s0 + c.mu_drift * t, (times.size, c.dim)))
    W = brownian_values(c.seed, c.n_steps, c.horizon, c.dim)
    if c.model == "brownian":
        return CadlagPath(times, W)
    if c.model in ("gbm", "merton"):
        exponent = c.sigma * W + (c.mu_drift - 0.5 * c.sigma**2) * t
        if c.model == "merton":
            exponent = exponent + _compound_poisson(c)
        return CadlagPath(times, c.s0 * np.exp(exponent))
    # mixed_bs
    if c.eta != 0.0:
        Y = np.column_stack(
            [
                np.concatenate([[0.0], np.cumsum(fbm_increments(c.hurst, c.n_steps, c.seed, c.horizon, stream=_STREAM_FBM + i))])
                for i in range(c.dim)
            ]
        )
    else:
        Y = np.zeros_like(W)
    exponent = c.sigma * W + c.eta * Y + c.nu * t + c.frac_drift * t ** (2 * c.hurst)
    return CadlagPath(times, c.s0 * np.exp(exponent))


def mixed_drivers(config: GeneratorConfig) -> tuple[CadlagPath, CadlagPath]:
    """Semimartingale part ``sigma W + nu t`` and finite-q-variation part
    ``eta B^H + frac_drift t^{2H}`` of the mixed model's log-price."""
    c = config
    times = uniform_grid(c.horizon, c.n_steps)
    t = times[:, None]
    W = brownian_values(c.seed, c.n_steps, c.horizon, c.dim)
    X = c.sigma * W + c.nu * t
    if c.eta != 0.0:
        B = np.column_stack(
            [
                np.concatenate([[0.0], np.cumsum(fbm_increments(c.hurst, c.n_steps, c.seed, c.horizon, stream=_STREAM_FBM + i))])
                for i in range(c.dim)
            ]
        )
        Y = c.eta * B + c.frac_drift * t ** (2 * c.hurst)
    else:
        Y = np.zeros_like(W) + c.frac_drift * t ** (2 * c.hurst)
    return CadlagPath(times, X), CadlagPath(times, Y)


def _compound_poisson(c: GeneratorConfig) -> np.ndarray:
    out = np.zeros((c.n_steps + 1, c.dim))
    if c.jump_intensity == 0.0:
        return out
    dt = c.horizon / c.n_steps
    for i in range(c.dim):
        rng = rng_for(c.seed, _STREAM_JUMP + i)
        counts = rng.poisson(c.jump_intensity * dt, size=c.n_steps)
        z = rng.standard_normal(c.n_steps)
        sizes = counts * c.jump_mean + np.sqrt(counts) * c.jump_std * z
        out[1:, i] = np.cumsum(sizes)
    return out


def fgn_autocovariance(hurst: float, lags: np.ndarray) -> np.ndarray:
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2)


@numba.njit(cache=True)
def _hosking(gamma, z):
    # Durbin-Levinson recursion: conditional mean and variance of x_k given x_0..x_{k-1}
    n = z.size
    x = np.empty(n)
    phi = np.zeros(n)
    prev = np.zeros(n)
    v = gamma[0]
    x[0] = math.sqrt(v) * z[0]
    for k in range(1, n):
        acc = gamma[k]
        for j in range(1, k):
            acc -= prev[j] * gamma[k - j]
        phikk = acc / v
        for j in range(1, k):
            phi[j] = prev[j] - phikk * prev[k - j]
        phi[k] = phikk
        v = v * (1.0 - phikk * phikk)
        mean = 0.0
        for j in range(1, k + 1):
            mean += phi[j] * x[k - j]
        x[k] = mean + math.sqrt(max(v, 0.0)) * z[k]
        for j in range(1, k + 1):
            prev[j] = phi[j]
    return x


def fbm_increments(hurst: float, n: int, seed: int, horizon: float = 1.0, stream: int = _STREAM_FBM) -> np.ndarray:
    """Exact fractional Gaussian noise on ``n`` steps of ``[0, horizon]``.

    Uses recursive conditional sampling (Hosking), O(n^2). Cumulative sums have
    ``Var(Y_t) = t^{2H}`` at grid times.
    """
    if not 0.0 < hurst < 1.0:
        raise ConfigError("Hurst index must lie in (0, 1)")
    if n < 1:
        raise ConfigError("n must be >= 1")
    z = rng_for(seed, stream).standard_normal(n)
    gamma = fgn_autocovariance(hurst, np.arange(n))
    return _hosking(gamma, z) * (horizon / n) ** hurst


# ---------------------------------------------------------------------------
# derived paths


def market_weights(path: CadlagPath) -> CadlagPath:
    if np.any(path.values <= 0):
        raise DomainError("market weights need strictly positive components")
    total = path.values.sum(axis=1, keepdims=True)
    return CadlagPath(path.times, path.values / total)


AUX_KINDS = ("time", "running_max", "running_integral")


def _parse_kind(kind) -> tuple[str, int | None]:
    if isinstance(kind, tuple):
        return kind[0], kind[1]
    name, _, idx = str(kind).partition(":")
    return name, (int(idx) if idx else None)


def augment_auxiliary(path: CadlagPath, kinds: Sequence | Iterable) -> CadlagPath:
    """Bounded-variation auxiliary path A on the grid of ``path``.

    ``kinds`` entries: ``"time"``, ``"running_max:i"``, ``"running_integral:i"``
    (or ``(name, i)`` tuples); component indices are zero-based.
    """
    kinds = list(kinds)
    if not kinds:
        raise ConfigError("need at least one auxiliary kind")
    cols = []
    dt = np.diff(path.times)
    for kind in kinds:
        name, idx = _parse_kind(kind)
        if name not in AUX_KINDS:
            raise ConfigError(f"unknown auxiliary kind {name!r}")
        if name == "time":
            cols.append(path.times.copy())
            continue
        if idx is None or not 0 <= idx < path.dim:
            raise ConfigError(f"{name} needs a component index in [0, {path.dim})")
        x = path.values[:, idx]
        if name == "running_max":
            cols.append(np.maximum.accumulate(x))
        else:
            cols.append(np.concatenate([[0.0], np.cumsum(x[:-1] * dt)]))
    return CadlagPath(path.times, np.column_stack(cols))
