"""Command-line entry point.

    heavy-ou simulate      --config cfg.json --out DIR
    heavy-ou scaling       --config cfg.json --out DIR
    heavy-ou stable-sample --config cfg.json --out DIR
    heavy-ou experiment    NAME --config cfg.json --out DIR [--threads N]

Trailing ``key=value`` arguments override config entries by dotted path,
e.g. ``sim.h=0.005`` or ``model.jumps.alpha=1.2``; values are parsed as JSON
when possible and kept as strings otherwise.

Exit status: 0 on success (for ``experiment``: all gates passed), 1 when an
experiment gate fails, 2 for configuration or usage errors.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .harness import EXPERIMENTS, ExperimentConfig, UnsupportedModeError, write_samples_csv
from .inference import JumpFilterConfig
from .levy_model import (
    JumpKind,
    JumpMeasureSpec,
    LevyModel,
    ScalingFunction,
    phi,
    tail,
    tilde_tail,
)
from .simulate import ConfigurationError, SimConfig, default_eps_cut, simulate_ou, write_path
from .stable_limit import (
    StableLimit,
    sample_joint_limit,
    sample_lamn_loglik,
    sample_mle_limit,
    sample_stable,
)

CONFIG_SCHEMA = "heavy_ou.config/1"
COMMANDS = ("simulate", "scaling", "stable-sample", "experiment")

EXIT_OK, EXIT_GATE_FAILED, EXIT_CONFIG = 0, 1, 2

DEFAULT_CONFIG = {
    "schema": CONFIG_SCHEMA,
    "model": {
        "b": 0.0,
        "jumps": {"kind": "stable_pareto", "alpha": 1.5, "c_minus": 0.5, "c_plus": 0.5, "gamma": 0.0},
    },
    "sim": {
        "T": 500.0, "h": 0.01, "theta": 1.0, "eps_cut": None,
        "small_jump_mode": "gaussian", "x0_mode": "zero", "x0": 0.0, "burn_in": 50.0, "seed": 0,
    },
    "experiment": {
        "theta0": 1.0, "horizons": [500.0], "replications": 1000, "u": 1.0, "rho": 0.5,
        "mode": "oracle", "master_seed": 20240601,
        "filter": {"threshold_exponent": 0.4, "threshold_scale": None, "scale_multiplier": 5.0},
    },
    "scaling": {"T_grid": [10.0, 100.0, 1000.0, 1e4, 1e5, 1e6], "mode": "numeric"},
    "stable_sample": {"n": 100000, "theta0": 1.0, "sigma": 1.0, "u": 1.0, "seed": 0},
}
# model.sigma has no default: it must be stated


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass
class RunManifest:
    command: str
    config_path: Path | None
    output_dir: Path
    overrides: list = field(default_factory=list)
    seed: int | None = None
    force: bool = False
    threads: int = 1
    experiment: str | None = None


# ------------------------------------------------------------------- config


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"{item}: override must look like dotted.key=value")
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key}: {p} is not a section")
        node[parts[-1]] = _parse_value(raw)
    return cfg


def load_config(path, overrides=()) -> dict:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: not valid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
        schema = raw.get("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"schema: expected {CONFIG_SCHEMA!r}, got {schema!r}")
    return apply_overrides(_merge(DEFAULT_CONFIG, raw), overrides)


def _get(cfg: dict, path: str, kind=float, allow_none=False):
    node = cfg
    for p in path.split("."):
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"{path}: required field is missing")
        node = node[p]
    if node is None:
        if allow_none:
            return None
        raise ConfigError(f"{path}: required field is missing")
    try:
        if kind is float:
            if isinstance(node, bool):
                raise TypeError
            return float(node)
        if kind is int:
            if isinstance(node, bool) or (isinstance(node, float) and not node.is_integer()):
                raise TypeError
            return int(node)
        if kind is str:
            if not isinstance(node, str):
                raise TypeError
            return node
        return kind(node)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected {kind.__name__}, got {node!r}") from None


def _build(section: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def build_model(cfg: dict) -> LevyModel:
    kind = _get(cfg, "model.jumps.kind", str)
    if kind not in {k.value for k in JumpKind}:
        raise ConfigError(f"model.jumps.kind: unknown family {kind!r}")
    jumps = _build(
        "model.jumps", JumpMeasureSpec,
        kind=kind,
        alpha=_get(cfg, "model.jumps.alpha"),
        c_minus=_get(cfg, "model.jumps.c_minus"),
        c_plus=_get(cfg, "model.jumps.c_plus"),
        gamma=_get(cfg, "model.jumps.gamma"),
    )
    sigma = _get(cfg, "model.sigma")
    if not sigma > 0:
        raise ConfigError(f"model.sigma: must be positive, got {sigma}")
    return _build("model", LevyModel, sigma=sigma, b=_get(cfg, "model.b"), jumps=jumps)


def build_sim(cfg: dict, model: LevyModel) -> SimConfig:
    h = _get(cfg, "sim.h")
    eps = _get(cfg, "sim.eps_cut", allow_none=True)
    if eps is None:
        if not h > 0:
            raise ConfigError(f"sim.h: must be positive, got {h}")
        eps = default_eps_cut(model.jumps, h)
    return _build(
        "sim", SimConfig,
        T=_get(cfg, "sim.T"), h=h, theta=_get(cfg, "sim.theta"), eps_cut=eps,
        small_jump_mode=_get(cfg, "sim.small_jump_mode", str),
        x0_mode=_get(cfg, "sim.x0_mode", str), x0=_get(cfg, "sim.x0"),
        burn_in=_get(cfg, "sim.burn_in"), seed=_get(cfg, "sim.seed", int),
    )


def build_experiment(cfg: dict) -> ExperimentConfig:
    model = build_model(cfg)
    sim = build_sim(cfg, model)
    horizons = cfg.get("experiment", {}).get("horizons")
    if not isinstance(horizons, list) or not horizons:
        raise ConfigError("experiment.horizons: expected a nonempty list")
    flt = _build(
        "experiment.filter", JumpFilterConfig,
        threshold_exponent=_get(cfg, "experiment.filter.threshold_exponent"),
        threshold_scale=_get(cfg, "experiment.filter.threshold_scale", allow_none=True),
        scale_multiplier=_get(cfg, "experiment.filter.scale_multiplier"),
    )
    return _build(
        "experiment", ExperimentConfig,
        model=model, theta0=_get(cfg, "experiment.theta0"), sim=sim,
        horizons=tuple(_get({"h": t}, "h") for t in horizons),
        replications=_get(cfg, "experiment.replications", int),
        u=_get(cfg, "experiment.u"), rho=_get(cfg, "experiment.rho"),
        mode=_get(cfg, "experiment.mode", str),
        master_seed=_get(cfg, "experiment.master_seed", int), filter=flt,
    )


# ----------------------------------------------------------------- commands


def _g(x) -> str:
    return f"{x:.17g}"


def _claim(paths, force):
    if not force:
        for p in paths:
            if p.exists():
                raise FileExistsError(f"{p} exists; pass --force to overwrite")


def cmd_simulate(m: RunManifest, cfg: dict) -> int:
    model = build_model(cfg)
    sim = build_sim(cfg, model)
    out = m.output_dir
    csv_path, json_path = out / "path.csv", out / "jumps.json"
    _claim([csv_path, json_path], m.force)
    t0 = time.perf_counter()
    path = simulate_ou(model, sim, sim.seed)
    write_path(path, csv_path, json_path)
    print(f"jumps={len(path.jump_sizes)} final_x={_g(path.x[-1])} runtime={time.perf_counter() - t0:.3f}s")
    return EXIT_OK


def cmd_scaling(m: RunManifest, cfg: dict) -> int:
    model = build_model(cfg)
    spec = model.jumps
    mode = _get(cfg, "scaling.mode", str)
    grid = cfg["scaling"].get("T_grid")
    if not isinstance(grid, list) or not grid:
        raise ConfigError("scaling.T_grid: expected a nonempty list")
    sf = _build("scaling", ScalingFunction, model=spec, mode=mode)
    out = m.output_dir / "scaling.csv"
    _claim([out], m.force)
    closed = ScalingFunction(spec, "closed_form") if spec.kind is JumpKind.STABLE_PARETO else None
    cols = {k: [] for k in ("T", "phi", "H", "H_tilde", "residual", "phi_closed_form")}
    for i, T in enumerate(grid):
        T = _get({"T": T}, "T")
        try:
            p = phi(sf, T)
        except ValueError as exc:
            raise ConfigError(f"scaling.T_grid[{i}]: {exc}") from None
        R = 1.0 / p
        cols["T"].append(T)
        cols["phi"].append(p)
        cols["H"].append(float(tail(spec, R)))
        cols["H_tilde"].append(float(tilde_tail(spec, R)))
        cols["residual"].append(abs(T * float(tilde_tail(spec, R)) - 1.0))
        cols["phi_closed_form"].append(phi(closed, T) if closed else math.nan)
    write_samples_csv(out, cols)
    print(f"rows={len(grid)} max_residual={_g(max(cols['residual']))}")
    return EXIT_OK


def cmd_stable_sample(m: RunManifest, cfg: dict) -> int:
    model = build_model(cfg)
    n = _get(cfg, "stable_sample.n", int)
    if n < 1:
        raise ConfigError(f"stable_sample.n: must be >= 1, got {n}")
    theta0 = _get(cfg, "stable_sample.theta0")
    sigma = _get(cfg, "stable_sample.sigma")
    u = _get(cfg, "stable_sample.u")
    seed = _get(cfg, "stable_sample.seed", int)
    if not (theta0 > 0 and sigma > 0):
        raise ConfigError("stable_sample: theta0 and sigma must be positive")
    out = m.output_dir / "stable_samples.csv"
    _claim([out], m.force)
    lim = StableLimit(model.jumps.alpha)
    rng = np.random.default_rng(seed)
    s = sample_stable(lim, rng, n)
    first, second = sample_joint_limit(lim, theta0, rng, n)
    cols = {
        "S": s,
        "joint_first": first,
        "joint_second": second,
        "lamn_loglik": sample_lamn_loglik(lim, theta0, sigma, u, rng, n),
        "mle_limit": sample_mle_limit(lim, theta0, sigma, rng, n),
    }
    write_samples_csv(out, cols)
    v = np.exp(-s)
    print(f"n={n} mean_exp_minus_S={_g(v.mean())} laplace_at_1={_g(math.exp(-lim.laplace_coefficient))}")
    return EXIT_OK


def cmd_experiment(m: RunManifest, cfg: dict) -> int:
    name = m.experiment
    if name not in EXPERIMENTS:
        print(f"unknown experiment {name!r}; valid names: {', '.join(sorted(EXPERIMENTS))}", file=sys.stderr)
        return EXIT_CONFIG
    ecfg = build_experiment(cfg)
    out = m.output_dir
    _claim([out / f"{name}_report.json", out / f"{name}_samples.csv"], m.force)
    try:
        report = EXPERIMENTS[name](ecfg, workers=m.threads)
    except UnsupportedModeError as exc:
        raise ConfigError(f"experiment.mode: {exc}") from None
    report.write(out, force=m.force)
    status = "PASS" if report.all_passed else "FAIL"
    print(
        f"{status} {name}: ks={_g(report.ks_distance)} threshold={_g(report.threshold)} "
        f"checks={report.checks} runtime={report.runtime_seconds:.1f}s"
    )
    return EXIT_OK if report.all_passed else EXIT_GATE_FAILED


HANDLERS = {
    "simulate": cmd_simulate,
    "scaling": cmd_scaling,
    "stable-sample": cmd_stable_sample,
    "experiment": cmd_experiment,
}


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heavy-ou", description="Heavy-tailed OU simulation and limit-law checks")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        if cmd == "experiment":
            p.add_argument("name", help=f"one of: {', '.join(sorted(EXPERIMENTS))}")
        p.add_argument("--config", type=Path, default=None, help="JSON config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the seed of this command")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--threads", type=int, default=1, help="worker processes for experiments")
        p.add_argument("overrides", nargs="*", metavar="key=value")
    return ap


def _seed_overrides(command: str, seed: int | None) -> list:
    if seed is None:
        return []
    key = {
        "simulate": "sim.seed",
        "experiment": "experiment.master_seed",
        "stable-sample": "stable_sample.seed",
    }.get(command)
    return [f"{key}={seed}"] if key else []


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    m = RunManifest(
        command=args.command,
        config_path=args.config,
        output_dir=args.out,
        overrides=list(args.overrides) + _seed_overrides(args.command, args.seed),
        seed=args.seed,
        force=args.force,
        threads=max(1, args.threads),
        experiment=getattr(args, "name", None),
    )
    try:
        cfg = load_config(m.config_path, m.overrides)
        m.output_dir.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return HANDLERS[m.command](m, cfg)
    except (ConfigError, ConfigurationError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
