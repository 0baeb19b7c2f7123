"""Command-line front end.

Four subcommands drive the benchmark harness and write long-format CSV plus,
unless disabled, a rendered PNG figure next to each CSV:

* ``bench-cosine``  — estimator quality vs sample count
* ``sweep-lambda``  — fixed-step sweep with one adaptive row
* ``optimize-toy``  — end-to-end toy training trajectory
* ``bias-enum``     — exact expected-estimate bias by enumeration

Configuration comes from built-in defaults, overridden by an optional flat
``key = value`` config file, overridden by command-line flags. Unknown keys
and out-of-range values are rejected before any computation. Exit codes:
0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench, plots, reports
from .bench import EstimatorSetup, setup_from_name
from .errors import PamgradError
from .optim import SGD, Adam, QuadraticLoss
from .polytopes import Categorical, KSubset, SpanningTree, exact_gradient

_UNSET = object()


class ConfigError(Exception):
    pass


# Defaults follow the synthetic-benchmark setup; trim seeds / s_grid for
# quick runs.
COMMON_DEFAULTS = {
    "spec": "categorical",
    "n": 50,
    "k": 5,
    "v": 5,
    "tau": 1.0,
    "seed": None,
    "seeds": 32,
    "guard": 10**6,
    "jobs": 0,            # 0 = all available cores
    "out": None,          # per-command default
    "plot": True,
    "timing": True,       # false writes wall_time_s as 0.0 for byte-stable output
}

COMMAND_DEFAULTS = {
    "bench-cosine": {
        "estimators": "sfe,ste,imle-forward,imle-central,aimle-forward,aimle-central",
        "s_grid": "1,10,100,1000,10000,100000",
        "lam": 1.0,
        "noise_temp": 1.0,
        "eta": 1e-3,
        "c": 1.0,
        "gamma": 0.9,
        "warmup_steps": 2000,
        "warmup_samples": 1000,
    },
    "sweep-lambda": {
        "lam_grid": "0:5:11",
        "samples": 1000,
        "mode": "central",
        "noise_temp": 1.0,
        "eta": 1e-3,
        "c": 1.0,
        "gamma": 0.9,
        "warmup_steps": 2000,
        "warmup_samples": 1000,
    },
    "optimize-toy": {
        "estimator": "aimle-central",
        "optimizer": "adam",
        "lr": 1e-3,
        "steps": 500,
        "samples": 1,
        "lam": 1.0,
        "noise_temp": 1.0,
        "alpha0": 0.0,
        "eta": 1e-3,
        "c": 1.0,
        "gamma": 0.9,
    },
    "bias-enum": {
        "n": 3,
        "lam_grid": "1,0.1,0.01",
    },
}

DEFAULT_OUT = {
    "bench-cosine": "bench_cosine.csv",
    "sweep-lambda": "sweep_lambda.csv",
    "optimize-toy": "toy_trajectory.csv",
    "bias-enum": "bias_enum.csv",
}


def _defaults(command: str) -> dict:
    merged = dict(COMMON_DEFAULTS)
    merged.update(COMMAND_DEFAULTS[command])
    return merged


def _coerce(key: str, raw: str, default):
    try:
        if key == "seed" and raw.lower() in ("none", ""):
            return None
        if isinstance(default, bool):
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError("expected true/false")
        if isinstance(default, int) or (default is None and key in ("seed",)):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc


def parse_config_file(path: str, defaults: dict) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; unknown keys rejected."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw, defaults[key])
    return values


def _parse_grid(text: str) -> list[float]:
    """Either 'start:stop:count' (inclusive linspace) or comma-separated values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 2:
            raise ConfigError("grid needs at least two points")
        return [float(x) for x in np.linspace(start, stop, count)]
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _build_spec(cfg: dict, command: str):
    kind = cfg["spec"]
    if kind == "categorical":
        return Categorical(cfg["n"])
    if kind == "ksubset":
        return KSubset(cfg["n"], cfg["k"])
    if kind == "spanningtree":
        return SpanningTree(cfg["v"])
    raise ConfigError(
        f"spec {kind!r} is not usable by {command} (grid paths need negated "
        "positive costs, not a Gaussian instance); choose categorical, "
        "ksubset or spanningtree"
    )


def _validate_common(cfg: dict):
    if cfg["n"] < 1 or cfg["k"] < 1 or cfg["v"] < 2:
        raise ConfigError("sizes must be positive (n, k >= 1; v >= 2)")
    if cfg["tau"] <= 0:
        raise ConfigError("tau must be > 0")
    if cfg["seeds"] < 1:
        raise ConfigError("seeds must be >= 1")
    if cfg["guard"] < 1:
        raise ConfigError("guard must be >= 1")
    if cfg["jobs"] < 0:
        raise ConfigError("jobs must be >= 0")


def _resolve_seed(cfg: dict):
    if cfg["seed"] is None:
        cfg["seed"] = int.from_bytes(os.urandom(4), "little")
        print(f"no seed given; selected seed = {cfg['seed']}")


def _jobs(cfg: dict) -> int:
    return cfg["jobs"] if cfg["jobs"] > 0 else (os.cpu_count() or 1)


def _estimator_setups(cfg: dict, names: list[str]) -> list[EstimatorSetup]:
    setups = []
    for name in names:
        try:
            setups.append(setup_from_name(
                name, lam=cfg["lam"], tau=cfg["tau"],
                noise_temperature=cfg["noise_temp"], eta=cfg["eta"], c=cfg["c"],
                gamma=cfg["gamma"], warmup_steps=cfg["warmup_steps"],
                warmup_samples=cfg["warmup_samples"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return setups


def _emit(records, cfg: dict, out: str, plotter):
    reports.write_records_csv(out, records)
    agg = bench.aggregate(records)
    agg_path = out[:-4] + ".agg.csv" if out.endswith(".csv") else out + ".agg.csv"
    reports.write_aggregate_csv(agg_path, agg)
    print(f"wrote {out} and {agg_path}")
    _print_aggregate(agg)
    if cfg["plot"]:
        fig_path = _fig_path(out)
        plotter(reports.load_csv(agg_path), fig_path)
        print(f"wrote {fig_path}")


def _fig_path(out: str) -> str:
    return (out[:-4] if out.endswith(".csv") else out) + ".png"


def _print_aggregate(agg_rows):
    header = f"{'estimator':>14} {'S':>7} {'lambda':>9} {'cosine':>8} {'+-':>7} {'zero_frac':>9}"
    print(header)
    for row in agg_rows:
        lam = row["lambda"]
        lam_txt = lam if isinstance(lam, str) else f"{lam:.3g}"
        print(f"{row['estimator']:>14} {row['S']:>7} {lam_txt:>9} "
              f"{row['cosine_mean']:>8.4f} {row['cosine_std']:>7.4f} "
              f"{row['zero_fraction_mean']:>9.4f}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_bench_cosine(cfg: dict) -> int:
    spec = _build_spec(cfg, "bench-cosine")
    names = [x.strip() for x in cfg["estimators"].split(",") if x.strip()]
    setups = _estimator_setups(cfg, names)
    s_grid = _parse_int_list(cfg["s_grid"])
    if not s_grid or any(s < 1 for s in s_grid):
        raise ConfigError("s_grid must list positive sample counts")
    _resolve_seed(cfg)
    seeds = [cfg["seed"] + i for i in range(cfg["seeds"])]
    records = bench.bench_cosine(
        spec, setups, s_grid, seeds, tau=cfg["tau"], guard=cfg["guard"],
        jobs=_jobs(cfg), measure_time=cfg["timing"])
    _emit(records, cfg, cfg["out"], plots.plot_bench_cosine)
    return 0


def cmd_sweep_lambda(cfg: dict) -> int:
    spec = _build_spec(cfg, "sweep-lambda")
    lam_grid = _parse_grid(cfg["lam_grid"])
    if any(lam < 0 for lam in lam_grid):
        raise ConfigError("lam_grid values must be >= 0")
    if cfg["samples"] < 1:
        raise ConfigError("samples must be >= 1")
    _resolve_seed(cfg)
    seeds = [cfg["seed"] + i for i in range(cfg["seeds"])]
    aimle = setup_from_name(
        f"aimle-{cfg['mode']}", tau=cfg["tau"],
        noise_temperature=cfg["noise_temp"], eta=cfg["eta"], c=cfg["c"],
        gamma=cfg["gamma"], warmup_steps=cfg["warmup_steps"],
        warmup_samples=cfg["warmup_samples"])
    records = bench.sweep_lambda(
        spec, lam_grid, seeds, samples=cfg["samples"], mode=cfg["mode"],
        tau=cfg["tau"], noise_temperature=cfg["noise_temp"], aimle=aimle,
        guard=cfg["guard"], jobs=_jobs(cfg), measure_time=cfg["timing"])
    _emit(records, cfg, cfg["out"], plots.plot_sweep_lambda)
    return 0


def cmd_optimize_toy(cfg: dict) -> int:
    spec = _build_spec(cfg, "optimize-toy")
    if cfg["steps"] < 1 or cfg["samples"] < 1:
        raise ConfigError("steps and samples must be >= 1")
    if cfg["optimizer"] == "sgd":
        opt = SGD(lr=cfg["lr"])
    elif cfg["optimizer"] == "adam":
        opt = Adam(lr=cfg["lr"])
    else:
        raise ConfigError(f"unknown optimizer {cfg['optimizer']!r}")
    try:
        setup = setup_from_name(
            cfg["estimator"], lam=cfg["lam"], tau=cfg["tau"],
            noise_temperature=cfg["noise_temp"], alpha0=cfg["alpha0"],
            eta=cfg["eta"], c=cfg["c"], gamma=cfg["gamma"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _resolve_seed(cfg)
    trajectory = bench.run_toy_training(
        spec, setup, opt, cfg["steps"], cfg["seed"], samples=cfg["samples"],
        tau=cfg["tau"], guard=cfg["guard"])
    reports.write_trajectory_csv(cfg["out"], trajectory)
    print(f"wrote {cfg['out']} "
          f"(final loss {trajectory[-1].loss:.6f} after {cfg['steps']} steps)")
    if cfg["plot"]:
        plots.plot_trajectory(reports.load_csv(cfg["out"]), _fig_path(cfg["out"]))
        print(f"wrote {_fig_path(cfg['out'])}")
    return 0


def cmd_bias_enum(cfg: dict) -> int:
    spec = _build_spec(cfg, "bias-enum")
    lam_grid = _parse_grid(cfg["lam_grid"])
    if any(lam <= 0 for lam in lam_grid):
        raise ConfigError("bias-enum lam_grid values must be > 0")
    _resolve_seed(cfg)
    theta, b = bench.draw_instance(spec, cfg["seed"])
    qloss = QuadraticLoss(b)
    truth = exact_gradient(spec, theta, cfg["tau"], qloss.value, guard=cfg["guard"])
    rows = []
    for lam in lam_grid:
        unscaled, scaled = bench.expected_imle_gradient_exact(
            spec, theta, qloss, lam, tau=cfg["tau"], guard=cfg["guard"])
        rows.append({
            "lambda": lam,
            "unscaled_norm": float(np.linalg.norm(unscaled)),
            "scaled_norm": float(np.linalg.norm(scaled)),
            "exact_norm": float(np.linalg.norm(truth)),
            "bias_norm": float(np.linalg.norm(scaled - truth)),
            "cosine_to_exact": bench.cosine_similarity(scaled, truth),
        })
    reports.write_bias_csv(cfg["out"], rows)
    print(f"wrote {cfg['out']}")
    for row in rows:
        print(f"  lambda={row['lambda']:<8g} bias_norm={row['bias_norm']:.6f} "
              f"unscaled_norm={row['unscaled_norm']:.6f}")
    if cfg["plot"]:
        plots.plot_bias(reports.load_csv(cfg["out"]), _fig_path(cfg["out"]))
        print(f"wrote {_fig_path(cfg['out'])}")
    return 0


COMMANDS = {
    "bench-cosine": cmd_bench_cosine,
    "sweep-lambda": cmd_sweep_lambda,
    "optimize-toy": cmd_optimize_toy,
    "bias-enum": cmd_bias_enum,
}


def _add_arguments(parser: argparse.ArgumentParser, defaults: dict):
    parser.add_argument("--config", default=None, help="flat key = value config file")
    for key, default in defaults.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            parser.add_argument(flag, dest=key, default=_UNSET,
                                help=f"true/false (default {default})")
        else:
            parser.add_argument(flag, dest=key, default=_UNSET,
                                help=f"default {default}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pamgrad",
        description="Gradient-estimator benchmarks for discrete distributions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        _add_arguments(sub.add_parser(command), _defaults(command))
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    defaults = _defaults(command)
    cfg = dict(defaults)
    if args.config is not None:
        cfg.update(parse_config_file(args.config, defaults))
    for key, default in defaults.items():
        raw = getattr(args, key)
        if raw is not _UNSET:
            cfg[key] = _coerce(key, str(raw), default)
    if cfg["out"] is None:
        cfg["out"] = DEFAULT_OUT[command]
    _validate_common(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (PamgradError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
