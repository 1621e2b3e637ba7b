"""Evidence for the Riemann-integrability property on sampled paths, Monte Carlo
experiments for semimartingale and mixed models, and rough-vs-Itô consistency."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import zeta

from .errors import ConfigError, DomainError
from .integration import _left_point_running, discrete_qv
from .partitions import NestedPartitionSequence, Partition, discretize, lebesgue_sequence
from .paths import CadlagPath, GeneratorConfig, generate, mixed_drivers
from .roughpath import area_n, running_integral
from .variation import (
    VariationTable,
    p_variation,
    superadditivity_defect,
    two_param_control,
    two_param_p_variation,
    variation_control,
)

VAR_CAP = 2048
TABLE_POINTS = 128


@dataclass(frozen=True)
class RieReport:
    sup_errors: list[float]
    cauchy_errors: list[float]
    area_p2var: list[float]
    path_pvar: float
    ratio: float
    defect: float
    n_star: int | None
    lemma_ratio: float
    p: float
    base: float
    verdict_flags: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExperimentConfig:
    model: GeneratorConfig = field(default_factory=GeneratorConfig)
    p: float = 2.5
    q: float = 2.5
    r: float = 1.25
    n_max: int = 8
    seeds: tuple[int, ...] = tuple(range(10))
    base: float = 1.0
    var_cap: int = VAR_CAP
    table_points: int = TABLE_POINTS
    # proof parameters, recorded for traceability only
    q0: float = 2.1
    eps: float = 0.01

    def __post_init__(self):
        p, q, r = self.p, self.q, self.r
        if not 2 < p < 3:
            raise ConfigError("p must lie in (2, 3)")
        if q < p:
            raise ConfigError("q must be >= p")
        if not 2 / p + 1 / q > 1:
            raise ConfigError("need 2/p + 1/q > 1")
        if not math.isclose(1 / r, 1 / p + 1 / q, rel_tol=1e-9):
            raise ConfigError("need 1/r = 1/p + 1/q")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if not self.seeds:
            raise ConfigError("need at least one seed")


def _coarse_sets(seq: NestedPartitionSequence, var_cap: int, table_points: int):
    return seq.largest_level_within(var_cap), seq.largest_level_within(table_points)


def rie_report(
    S: CadlagPath,
    seq: NestedPartitionSequence,
    p: float = 2.5,
    var_cap: int = VAR_CAP,
    table_points: int = TABLE_POINTS,
) -> RieReport:
    """All diagnostic fields for one path and partition sequence.

    Variations are taken over the finest Lebesgue level (or the grid) with at
    most ``var_cap`` points, which gives lower bounds when coarsened; the
    candidate control uses a level with at most ``table_points`` points.
    """
    n_max = seq.n_max
    base = seq.base
    parts = [seq.level(n) for n in range(1, n_max + 1)]
    sup_errors = [float(np.sqrt(np.sum((discretize(S, P).values - S.values) ** 2, axis=1)).max()) for P in parts]
    riemann = [running_integral(S, S, P) for P in parts]
    cauchy = [
        float(np.sqrt(np.sum((riemann[k] - riemann[k + 1]) ** 2, axis=(1, 2))).max()) for k in range(n_max - 1)
    ]
    coarse, table_set = _coarse_sets(seq, var_cap, table_points)
    areas = [area_n(S, P) for P in parts]
    area_var = [two_param_p_variation(A, p / 2, indices=coarse.indices, cap=max(var_cap, 2)) for A in areas]
    path_var = p_variation(S, p, indices=coarse.indices, cap=max(var_cap, 2))

    # candidate control on the small point set
    w_path = variation_control(S, p, indices=table_set.indices)
    w_area = None
    for A in areas:
        tab = two_param_control(A, p / 2, S.times, indices=table_set.indices)
        w_area = tab if w_area is None else w_area.maximum(tab)
    w_cand = w_path + w_area
    tidx = table_set.indices
    ii, jj = np.triu_indices(tidx.size, 1)
    inc = S.values[tidx[jj]] - S.values[tidx[ii]]
    num_path = np.sum(inc**2, axis=1) ** (p / 2)
    num_area = np.zeros_like(num_path)
    for A in areas:
        vals = A.values(tidx[ii], tidx[jj])
        num_area = np.maximum(num_area, np.sum(vals**2, axis=(1, 2)) ** (p / 4))
    denom = w_cand.w[ii, jj]
    ratio = 0.0
    for num in (num_path, num_area):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(num == 0, 0.0, num / np.where(denom > 0, denom, np.inf))
        if np.any((num > 0) & (denom <= 0)):
            r = np.where((num > 0) & (denom <= 0), np.inf, r)
        ratio = max(ratio, float(r.max(initial=0.0)))
    defect = max(superadditivity_defect(w_cand), 0.0)

    sup_area = max(area_var) if area_var else 0.0
    lemma_ratio = sup_area / path_var**2 if path_var > 0 else 0.0
    bounds = [2 * base * 2.0**-n for n in range(1, n_max + 1)]
    flags = {
        "sup_error_within_2h": all(e <= b for e, b in zip(sup_errors, bounds)),
        "cauchy_nonincreasing_from_4": _nonincreasing(cauchy[3:]) if len(cauchy) > 4 else None,
        "cauchy_last_below_3to4": (cauchy[-1] < cauchy[2]) if len(cauchy) >= 4 else None,
        "full_refinement_reached": seq.n_star is not None and seq.n_star <= n_max,
        "variation_coarsened": not coarse.is_full(),
        "variation_points": int(len(coarse)),
        "table_points": int(len(table_set)),
        "candidate_superadditive": defect <= 1e-12 * max(1.0, float(w_cand.w.max(initial=0.0))),
    }
    return RieReport(
        sup_errors=sup_errors,
        cauchy_errors=cauchy,
        area_p2var=[float(v) for v in area_var],
        path_pvar=float(path_var),
        ratio=float(ratio),
        defect=float(defect),
        n_star=seq.n_star,
        lemma_ratio=float(lemma_ratio),
        p=p,
        base=base,
        verdict_flags=flags,
    )


def _nonincreasing(xs: Sequence[float]) -> bool:
    return all(b <= a for a, b in zip(xs, xs[1:]))


def _aggregate(reports: list[RieReport]) -> dict:
    lemma = np.array([r.lemma_ratio for r in reports])
    sup_area = np.array([max(r.area_p2var) for r in reports])
    med = float(np.median(lemma)) if lemma.size else 0.0
    late = [r.verdict_flags["cauchy_last_below_3to4"] for r in reports]
    mono = [r.verdict_flags["cauchy_nonincreasing_from_4"] for r in reports]
    return {
        "n_seeds": len(reports),
        "fraction_sup_error_within_2h": float(np.mean([r.verdict_flags["sup_error_within_2h"] for r in reports])),
        "fraction_cauchy_last_below_3to4": float(np.mean([bool(x) for x in late])),
        "fraction_cauchy_nonincreasing_from_4": float(np.mean([bool(x) for x in mono])),
        "sup_area_p2var": {"median": float(np.median(sup_area)), "max": float(sup_area.max())},
        "lemma_ratio": {"median": med, "max": float(lemma.max()), "min": float(lemma.min())},
        "fraction_lemma_within_10x_median": float(np.mean(lemma <= 10 * med)) if med > 0 else 1.0,
        "max_ratio": float(max(r.ratio for r in reports)),
        "max_defect": float(max(r.defect for r in reports)),
    }


def semimartingale_experiment(config: ExperimentConfig) -> dict:
    """Per-seed RIE reports for brownian / gbm / merton paths plus aggregates."""
    if config.model.model not in ("brownian", "gbm", "merton"):
        raise ConfigError("semimartingale experiments take brownian, gbm or merton models")
    reports = []
    for seed in sorted(config.seeds):
        S = generate(config.model.replace(seed=int(seed)))
        seq = lebesgue_sequence(S, config.n_max, config.base)
        reports.append(rie_report(S, seq, config.p, config.var_cap, config.table_points))
    return {
        "kind": "semimartingale",
        "config": _config_dict(config),
        "seeds": sorted(int(s) for s in config.seeds),
        "reports": [r.to_dict() for r in reports],
        "aggregate": _aggregate(reports),
    }


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["seeds"] = list(d["seeds"])
    return d


def young_bound_constant(p: float, q: float) -> float:
    theta = 1 / p + 1 / q
    if not theta > 1:
        raise ConfigError("Young bound needs 1/p + 1/q > 1")
    return float(2**theta * zeta(theta))


def young_blocks(
    X: CadlagPath,
    Y: CadlagPath,
    partition: Partition,
    points,
    p: float,
    q: float,
    ratio_cap: int = 256,
) -> dict:
    """p/2-variation of the four blocks of ∫Z^n⊗dZ, and the Young ratio of the YY block.

    Block variations are taken over ``points``. The ratio
    |YY^n_{s,t}| / (‖Y‖_{q,[s,t]}‖Y‖_{p,[s,t]}) is evaluated over all pairs of
    partition points, with the variations taken over the same points (the
    Riemann sums only see Y there), and compared with 2^θ ζ(θ), θ = 1/p + 1/q.
    It is skipped (``None``) when the partition has more than ``ratio_cap`` points.
    """
    blocks = {
        "XX": area_n(X, partition),
        "YY": area_n(Y, partition),
        "XY": area_n(X, partition, integrator=Y),
        "YX": area_n(Y, partition, integrator=X),
    }
    idx = np.asarray(points)
    out = {k: two_param_p_variation(A, p / 2, indices=idx) for k, A in blocks.items()}
    ratio_max = None
    pidx = partition.indices
    if pidx.size <= ratio_cap:
        wq = variation_control(Y, q, indices=pidx)
        wp = variation_control(Y, p, indices=pidx)
        ii, jj = np.triu_indices(pidx.size, 1)
        yy = np.sqrt(np.sum(blocks["YY"].values(pidx[ii], pidx[jj]) ** 2, axis=(1, 2)))
        denom = wq.w[ii, jj] ** (1 / q) * wp.w[ii, jj] ** (1 / p)
        ratio = np.where(yy == 0, 0.0, yy / np.where(denom > 0, denom, np.inf))
        ratio_max = float(ratio.max(initial=0.0))
    return {
        "block_p2var": out,
        "young_ratio_max": ratio_max,
        "young_constant": young_bound_constant(p, q),
    }


def _mixed_config(config: ExperimentConfig) -> GeneratorConfig:
    m = config.model
    if m.model != "mixed_bs":
        m = m.replace(model="mixed_bs")
    return m


def young_semimartingale_experiment(
    config: ExperimentConfig, young_p: float = 2.5, young_q: float = 1.5
) -> dict:
    """RIE reports for Z = X + Y with X = σW + νt and Y = ηB^H + κ t^{2H}.

    Partitions use joint crossings of X and Y. Each per-seed entry also
    carries the four-block decomposition and the Young ratio of the YY block.
    """
    m = _mixed_config(config)
    if m.hurst <= 0.5:
        raise ConfigError("Young semimartingales need H > 1/2")
    reports, blocks = [], []
    for seed in sorted(config.seeds):
        X, Y = mixed_drivers(m.replace(seed=int(seed)))
        Z = X + Y
        seq = lebesgue_sequence(Z, config.n_max, config.base, drivers=[X, Y])
        rep = rie_report(Z, seq, config.p, config.var_cap, config.table_points)
        table_set = seq.largest_level_within(config.table_points)
        per_level = []
        for n in range(1, config.n_max + 1):
            per_level.append(young_blocks(X, Y, seq.level(n), table_set.indices, young_p, young_q))
        reports.append(rep)
        # each driver is within 2h of its discretization; Z = X + Y only within 4h
        driver_err = [
            max(float(np.abs(discretize(D, seq.level(n)).values - D.values).max()) for D in (X, Y))
            for n in range(1, config.n_max + 1)
        ]
        hs = [seq.threshold(n) for n in range(1, config.n_max + 1)]
        blocks.append(
            {
                "driver_sup_errors": driver_err,
                "drivers_within_2h": all(e <= 2 * h for e, h in zip(driver_err, hs)),
                "sup_error_within_4h": all(e <= 4 * h for e, h in zip(rep.sup_errors, hs)),
                "young_ratio_max": max(
                    (b["young_ratio_max"] for b in per_level if b["young_ratio_max"] is not None), default=None
                ),
                "young_levels_checked": [
                    n for n, b in enumerate(per_level, 1) if b["young_ratio_max"] is not None
                ],
                "young_constant": per_level[0]["young_constant"],
                "block_p2var_sup": {
                    k: max(b["block_p2var"][k] for b in per_level) for k in ("XX", "YY", "XY", "YX")
                },
            }
        )
    return {
        "kind": "young_semimartingale",
        "config": _config_dict(config),
        "seeds": sorted(int(s) for s in config.seeds),
        "reports": [r.to_dict() for r in reports],
        "blocks": blocks,
        "aggregate": {
            **_aggregate(reports),
            "fraction_drivers_within_2h": float(np.mean([b["drivers_within_2h"] for b in blocks])),
            "fraction_sup_error_within_4h": float(np.mean([b["sup_error_within_4h"] for b in blocks])),
        },
    }


def ito_consistency(config: ExperimentConfig) -> dict:
    """Pathwise ∫W dW at level n_max against (W_T² − ⟨W⟩^{n_max}_T)/2, over seeds."""
    if config.model.model != "brownian":
        raise ConfigError("Itô consistency runs on the brownian model")
    if config.model.dim != 1:
        raise ConfigError("Itô consistency uses one-dimensional W")
    V, identity = [], []
    for seed in sorted(config.seeds):
        W = generate(config.model.replace(seed=int(seed)))
        seq = lebesgue_sequence(W, config.n_max, config.base)
        part = seq.level(config.n_max)
        v = float(_left_point_running(W.values, W.values, part)[-1])
        qv = float(discrete_qv(W, part).values[-1, 0, 0])
        closed = 0.5 * (W.values[-1, 0] ** 2 - W.values[0, 0] ** 2 - qv)
        V.append(v)
        scale = max(1.0, float(np.abs(W.values).max()) ** 2)
        identity.append(abs(v - closed) / scale)
    V = np.array(V)
    T = config.model.horizon
    n = V.size
    mean = float(V.mean())
    var = float(V.var(ddof=1)) if n > 1 else 0.0
    stderr = math.sqrt(var / n) if n > 1 else float("inf")
    return {
        "kind": "ito_consistency",
        "config": _config_dict(config),
        "terminal_values": V.tolist(),
        "max_identity_defect": float(max(identity)),
        "mean": mean,
        "stderr": stderr,
        "mean_within_3se": bool(abs(mean) <= 3 * stderr),
        "variance": var,
        "target_variance": T**2 / 2,
        "variance_rel_error": abs(var - T**2 / 2) / (T**2 / 2),
    }
