"""Command-line front end.

Exit codes: 0 success, 2 contract/config/usage errors, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import integration as I
from .controlled import ControlledPath, builtin_function
from .errors import ConfigError, PathwiseError
from .partitions import NestedPartitionSequence, Partition, lebesgue_sequence
from .paths import CadlagPath, GeneratorConfig, generate, market_weights, parse_kv_config
from .rie import (
    ExperimentConfig,
    ito_consistency,
    rie_report,
    semimartingale_experiment,
    young_semimartingale_experiment,
)
from .roughpath import area_n, limit_triple
from .strategies import (
    MixingMeasure,
    capital_process,
    constant_strategy,
    cover_portfolio,
    entropy,
    functionally_generated,
    generated_strategies,
    quadratic,
)
from .variation import p_variation, variation_control


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(target, text: str) -> None:
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str, suffix: str = "") -> None:
    if args.out:
        out = Path(args.out)
        if suffix and out.suffix == "":
            out = out.with_suffix(suffix)
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument plumbing

_MODEL_FLAGS = {
    "model": str,
    "T": float,
    "steps": int,
    "dim": int,
    "s0": float,
    "sigma": float,
    "mu_drift": float,
    "eta": float,
    "nu": float,
    "frac_drift": float,
    "hurst": float,
    "jump_intensity": float,
    "jump_mean": float,
    "jump_std": float,
}


def _common() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    parent.add_argument("--out", default=None, help="output file (stdout if omitted)")
    parent.add_argument("--config", default=None, help="key=value configuration file")
    return parent


def _model_args(p: argparse.ArgumentParser, default_model: str = "brownian") -> None:
    g = p.add_argument_group("model")
    for name, kind in _MODEL_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=f"m_{name}", type=kind, default=None)
    p.set_defaults(default_model=default_model)


def _path_args(p: argparse.ArgumentParser, default_model: str = "brownian") -> None:
    p.add_argument("--path", default=None, help="path CSV (else generate from model flags)")
    _model_args(p, default_model)


def _config_map(args) -> dict:
    cfg = parse_kv_config(args.config) if args.config else {}
    return cfg


def _generator_config(args) -> GeneratorConfig:
    cfg = _config_map(args)
    mapping = {"model": getattr(args, "default_model", "brownian"), **cfg}
    for name in _MODEL_FLAGS:
        val = getattr(args, f"m_{name}", None)
        if val is not None:
            mapping[name] = val
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    mapping["seed"] = seed
    return GeneratorConfig.from_mapping(mapping)


def _load_path(args) -> CadlagPath:
    if getattr(args, "path", None):
        return CadlagPath.from_csv(args.path)
    return generate(_generator_config(args))


def _cfg_value(args, name: str, default, kind=float):
    val = getattr(args, name, None)
    if val is not None:
        return val
    cfg = _config_map(args)
    key = name.replace("_", "-")
    for k in (name, key):
        if k in cfg:
            return kind(cfg[k])
    return default


def _level(text: str):
    if text == "full":
        return "full"
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"level must be an integer or 'full', got {text!r}") from exc


def _sequence(args, path: CadlagPath, level=None) -> NestedPartitionSequence:
    n_max = int(_cfg_value(args, "n_max", 8, int))
    if isinstance(level, int):
        n_max = max(n_max, level)
    return lebesgue_sequence(path, n_max, float(_cfg_value(args, "base", 1.0)))


def _partition(args, path: CadlagPath, level):
    if level == "full":
        return Partition.full(path.times), "full"
    seq = _sequence(args, path, level)
    return seq.level(level), level


def _experiment(args, model_override: str | None = None) -> ExperimentConfig:
    gen = _generator_config(args)
    if model_override:
        gen = gen.replace(model=model_override)
    p = float(_cfg_value(args, "p", 2.5))
    q = float(_cfg_value(args, "q", p))
    r = 1.0 / (1.0 / p + 1.0 / q)
    n_seeds = int(_cfg_value(args, "n_seeds", 1, int))
    first = args.seed if args.seed is not None else int(_config_map(args).get("seed", 0))
    return ExperimentConfig(
        model=gen,
        p=p,
        q=q,
        r=r,
        n_max=int(_cfg_value(args, "n_max", 8, int)),
        seeds=tuple(range(first, first + n_seeds)),
        base=float(_cfg_value(args, "base", 1.0)),
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> None:
    _emit(args, generate(_generator_config(args)).to_csv(), ".csv")


def cmd_partitions(args) -> None:
    path = _load_path(args)
    _emit(args, _sequence(args, path).to_text())


def cmd_variation(args) -> None:
    path = _load_path(args)
    p = float(args.p)
    if args.table:
        _emit(args, variation_control(path, p).to_csv(), ".csv")
        return
    lo = path.times[0] if args.from_ is None else args.from_
    hi = path.times[-1] if args.to is None else args.to
    value = p_variation(path, p, (lo, hi))
    _emit(args, dumps({"p": p, "from": lo, "to": hi, "p_variation": value}), ".json")


def _read_pairs(source) -> list[tuple[float, float]]:
    pairs = []
    for line in Path(source).read_text().splitlines():
        line = line.split("#", 1)[0].replace(",", " ").split()
        if line:
            if len(line) != 2:
                raise ConfigError(f"pair lines need two times, got {line!r}")
            pairs.append((float(line[0]), float(line[1])))
    return pairs


def cmd_area(args) -> None:
    path = _load_path(args)
    level = _level(args.level)
    part, _ = _partition(args, path, level)
    A = area_n(path, part)
    if args.pairs:
        pairs = _read_pairs(args.pairs)
    else:
        pairs = [(float(path.times[0]), float(t)) for t in path.times[1:]]
    d = path.dim
    head = ["s", "t"] + [f"a{i + 1}{j + 1}" for i in range(d) for j in range(d)]
    lines = [",".join(head)]
    for s, t in pairs:
        if not s < t:
            raise ConfigError("area pairs need s < t")
        vals = A(s, t).reshape(-1)
        lines.append(",".join([repr(s), repr(t)] + [repr(float(v)) for v in vals]))
    _emit(args, "\n".join(lines) + "\n", ".csv")


def _integrand(args, path: CadlagPath) -> CadlagPath:
    name = args.integrand
    if name == "path":
        return path
    f = builtin_function(name, path.dim)
    return CadlagPath(path.times, f(path.values))


def cmd_integrate(args) -> None:
    path = _load_path(args)
    level = _level(args.level)
    F = _integrand(args, path)
    if args.method == "left":
        part, label = _partition(args, path, level)
        out = I.left_point_integral(F, path, part, label)
    elif args.method == "young":
        out = I.young_integral(F, path, p=float(args.p), q=float(args.q))
    else:
        seq = _sequence(args, path, level if isinstance(level, int) else None)
        f = builtin_function("linear", path.dim) if args.integrand == "path" else builtin_function(args.integrand, path.dim)
        strat = functionally_generated(f, path)
        G = ControlledPath(path, np.broadcast_to(np.eye(path.dim), (path.times.size, path.dim, path.dim)), path)
        out = I.compensated_rough_integral(strat.ctrl, G, limit_triple(path, seq), seq, local_estimates=False)
    _emit(args, out.to_csv(), ".csv")


def cmd_qv(args) -> None:
    path = _load_path(args)
    level = _level(args.level)
    part, label = _partition(args, path, level)
    _emit(args, I.discrete_qv(path, part, label).to_csv(), ".csv")


def _strategy_report(path, seq, strat, n) -> dict:
    V = capital_process(strat, path, seq, n)
    return {
        "label": strat.label,
        "level": V.meta["level"],
        "terminal_capital": float(V.terminal),
        "compensated_terminal": V.meta.get("compensated_terminal"),
        "gap": V.meta.get("gap"),
        "admissibility": V.meta["admissibility"],
        "capital": V.values,
        "times": path.times,
    }


def cmd_strategy(args) -> None:
    path = _load_path(args)
    level = _level(args.level)
    seq = _sequence(args, path, level if isinstance(level, int) else None)
    gen = args.gen
    if gen == "const":
        strat = constant_strategy(path, float(args.c))
    else:
        name = {"linear": "linear", "entropy": "entropy_gradient", "quadratic": "quadratic", "tanh": "tanh"}[gen]
        strat = functionally_generated(builtin_function(name, path.dim), path)
    _emit(args, dumps(_strategy_report(path, seq, strat, level)), ".json")


def _read_atoms(source, dim: int) -> MixingMeasure:
    atoms, weights = [], []
    for line in Path(source).read_text().splitlines():
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) < 2:
            raise ConfigError(f"atom lines are 'name weight [key=value ...]', got {line!r}")
        params = dict(kv.split("=", 1) for kv in parts[2:])
        params = {k: float(v) for k, v in params.items()}
        atoms.append(builtin_function(parts[0], dim, **params))
        weights.append(float(parts[1]))
    return MixingMeasure(tuple(atoms), tuple(weights))


def cmd_cover(args) -> None:
    path = _load_path(args)
    level = _level(args.level)
    seq = _sequence(args, path, level if isinstance(level, int) else None)
    measure = _read_atoms(args.atoms, path.dim)
    _, V = cover_portfolio(measure, path, None, seq, level)
    report = {
        "terminal_capital": float(V.terminal),
        "mixture_defect": V.meta["mixture_defect"],
        "atom_terminals": V.meta["atom_terminals"],
        "level": V.meta["level"],
        "capital": V.values,
        "times": path.times,
    }
    _emit(args, dumps(report), ".json")


def cmd_spt(args) -> None:
    path = _load_path(args)
    mu = market_weights(path)
    level = _level(args.level)
    seq = _sequence(args, mu, level if isinstance(level, int) else None)
    G = entropy() if args.generator == "entropy" else quadratic(float(args.c))
    out = generated_strategies(G, mu, seq, level)
    report = {
        "generator": G.name,
        "C0": out["C0"],
        "level": out["level"],
        "gamma": out["gamma"],
        "additive_self_financing_defect": out["additive"].report["self_financing_defect"],
        "multiplicative_self_financing_defect": out["multiplicative"].report["self_financing_defect"],
        "pi_additive": out["pi"],
        "pi_multiplicative": out["pi_multiplicative"],
        "Pi_closed_form": out["Pi"],
        "Pi_gap": out["Pi_gap"],
        "times": mu.times,
    }
    _emit(args, dumps(report), ".json")


def cmd_rie_check(args) -> None:
    path = _load_path(args)
    seq = _sequence(args, path)
    rep = rie_report(path, seq, float(_cfg_value(args, "p", 2.5)))
    _emit(args, dumps(rep.to_dict()), ".json")


def cmd_young_check(args) -> None:
    cfg = _experiment(args, model_override="mixed_bs")
    _emit(args, dumps(young_semimartingale_experiment(cfg)), ".json")


def cmd_ito(args) -> None:
    cfg = _experiment(args, model_override="brownian")
    _emit(args, dumps(ito_consistency(cfg)), ".json")


def cmd_report(args) -> None:
    cfg = _experiment(args)
    result = semimartingale_experiment(cfg)
    _emit(args, dumps(result), ".json")
    if args.csv:
        lines = ["seed,level,sup_error,cauchy_error,area_p2var"]
        for seed, rep in zip(result["seeds"], result["reports"]):
            for n, (e, a) in enumerate(zip(rep["sup_errors"], rep["area_p2var"]), 1):
                c = rep["cauchy_errors"][n - 1] if n - 1 < len(rep["cauchy_errors"]) else ""
                lines.append(f"{seed},{n},{e!r},{c!r},{a!r}")
        write_atomic(args.csv, "\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="pathwise", description="Pathwise rough-path integration toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_text, model="brownian", path=True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if path:
            _path_args(p, model)
        else:
            _model_args(p, model)
        p.set_defaults(func=fn)
        return p

    add("generate", cmd_generate, "simulate a path and write CSV", path=False)

    p = add("partitions", cmd_partitions, "Lebesgue partition levels (one line per level)")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = add("variation", cmd_variation, "p-variation over [from, to] or the full control table")
    p.add_argument("--p", type=float, default=2.5)
    p.add_argument("--from", dest="from_", type=float, default=None)
    p.add_argument("--to", type=float, default=None)
    p.add_argument("--table", action="store_true")

    p = add("area", cmd_area, "area process A^n at grid-time pairs")
    p.add_argument("--level", default="full")
    p.add_argument("--pairs", default=None, help="file of 's t' lines")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = add("integrate", cmd_integrate, "running integral of an integrand against the path")
    p.add_argument("--method", choices=("left", "compensated", "young"), default="left")
    p.add_argument("--level", default="full")
    p.add_argument("--integrand", default="path", help="'path' or a built-in field name")
    p.add_argument("--p", type=float, default=2.5)
    p.add_argument("--q", type=float, default=1.5)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = add("qv", cmd_qv, "discrete quadratic variation")
    p.add_argument("--level", default="full")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = add("strategy", cmd_strategy, "capital process of a built-in strategy", model="gbm")
    p.add_argument("--gen", choices=("const", "linear", "entropy", "quadratic", "tanh"), default="const")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--level", default="full")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = add("cover", cmd_cover, "Cover-style mixture of built-in strategies", model="gbm")
    p.add_argument("--atoms", required=True, help="file of 'name weight [k=v ...]' lines")
    p.add_argument("--level", default="full")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = add("spt", cmd_spt, "entropy / quadratic generated strategies on market weights", model="gbm")
    p.add_argument("--generator", choices=("entropy", "quadratic"), default="entropy")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--level", default="full")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)

    p = add("rie-check", cmd_rie_check, "RIE evidence report for one path")
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--base", type=float, default=None)
    p.add_argument("--p", type=float, default=None)

    for name, fn, model, text in (
        ("young-check", cmd_young_check, "mixed_bs", "mixed-model RIE and Young block checks"),
        ("ito-consistency", cmd_ito, "brownian", "pathwise vs Itô integral over seeds"),
        ("report", cmd_report, "brownian", "semimartingale RIE experiment over seeds"),
    ):
        p = add(name, fn, text, model=model, path=False)
        p.add_argument("--n-max", dest="n_max", type=int, default=None)
        p.add_argument("--n-seeds", dest="n_seeds", type=int, default=None)
        p.add_argument("--base", type=float, default=None)
        p.add_argument("--p", type=float, default=None)
        p.add_argument("--q", type=float, default=None)
        if name == "report":
            p.add_argument("--csv", default=None, help="also write a per-level CSV here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except _UsageError as exc:
        print(f"pathwise: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except PathwiseError as exc:
        print(f"pathwise: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"pathwise: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
