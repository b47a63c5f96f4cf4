"""Experiment runner: ``permlaw <command> --config <file> [--out <dir>] [--no-timestamp]``.

One YAML config describes one experiment and produces one output directory
holding ``results.csv``, ``summary.json`` and ``plot.gp``.  Exit status is 0
on success, 1 on a computation error and 2 on a config error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import balance, environments, matrix, randomized, scaling
from .errors import ConfigError, PermlawError

__all__ = ["COMMANDS", "COLUMNS", "ExperimentConfig", "validate", "load_config", "run", "main"]

COMMANDS = ("perm", "sinkhorn", "sm", "balance", "llp", "bounds", "gaussian", "matching")

COLUMNS = (
    "command", "label", "n", "seed",
    "log_perm", "per", "sm", "ratio", "residual", "l1_distance",
    "bound_lhs", "bound_rhs", "mc_mean", "mc_stderr", "z",
    "config_hash",
)

FIELDS = {
    "command", "input", "matrix", "environment", "seeds", "ns", "epsilon", "lambda",
    "tol", "max_iter", "iters", "samples", "output_dir",
}

PLOT_Y = {
    "perm": "per", "sinkhorn": "residual", "sm": "sm", "balance": "l1_distance", "llp": "ratio",
    "bounds": "bound_rhs", "gaussian": "z", "matching": "z",
}


@dataclass
class ExperimentConfig:
    command: str
    input: str | None = None
    matrix: list | None = None
    environment: dict | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    ns: list[int] = field(default_factory=list)
    epsilon: float | None = None
    lam: float | None = None
    tol: float = scaling.DEFAULT_TOL
    max_iter: int = scaling.DEFAULT_MAX_ITER
    iters: int = 1000
    samples: int = 10_000
    output_dir: str = "permlaw_out"
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "ExperimentConfig":
        kw = {k: v for k, v in d.items() if k in FIELDS and k != "lambda"}
        if "lambda" in d:
            kw["lam"] = d["lambda"]
        return cls(**kw, base_dir=Path(base_dir), raw=dict(d))

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def load_input(self) -> np.ndarray:
        if self.matrix is not None:
            return matrix.as_matrix(self.matrix)
        path = Path(self.input)
        if not path.is_absolute():
            path = self.base_dir / path
        return matrix.read_matrix(path)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _int_list(d, key, out, *, lo=None):
    v = d.get(key)
    if not isinstance(v, list) or not v or not all(isinstance(t, int) and not isinstance(t, bool) for t in v):
        out.append(f"{key}: must be a non-empty list of integers")
        return None
    if lo is not None and min(v) < lo:
        out.append(f"{key}: every value must be >= {lo}")
    return v


def validate(config) -> list[str]:
    """Return the list of violations; empty means the config is runnable."""
    out: list[str] = []
    if not isinstance(config, dict):
        return ["config: must be a mapping of keys to values"]
    for key in sorted(set(config) - FIELDS):
        out.append(f"{key}: unknown field")
    cmd = config.get("command")
    if cmd not in COMMANDS:
        out.append(f"command: must be one of {', '.join(COMMANDS)}")
        return out

    has_input = config.get("input") is not None or config.get("matrix") is not None
    if config.get("input") is not None and config.get("matrix") is not None:
        out.append("input: give either input or matrix, not both")
    if config.get("input") is not None and not isinstance(config["input"], str):
        out.append("input: must be a path string")
    if config.get("matrix") is not None:
        try:
            matrix.as_matrix(config["matrix"])
        except (PermlawError, TypeError, ValueError) as exc:
            out.append(f"matrix: {exc}")

    env = None
    if "environment" in config:
        if not isinstance(config["environment"], dict):
            out.append("environment: must be a mapping")
        else:
            try:
                env = environments.environment_from_dict(config["environment"])
            except (PermlawError, KeyError, TypeError, ValueError) as exc:
                out.append(f"environment: {exc}")

    if "seeds" in config:
        _int_list(config, "seeds", out)
    ns = _int_list(config, "ns", out, lo=1) if "ns" in config else None

    for key in ("tol", "epsilon", "lambda"):
        if key in config and not (_is_num(config[key]) and config[key] > 0):
            out.append(f"{key}: must be a positive number")
    for key in ("max_iter", "iters", "samples"):
        if key in config and not (isinstance(config[key], int) and not isinstance(config[key], bool) and config[key] > 0):
            out.append(f"{key}: must be a positive integer")
    if "output_dir" in config and not isinstance(config["output_dir"], str):
        out.append("output_dir: must be a path string")

    needs_ns_with_env = cmd in ("perm", "balance", "llp", "gaussian", "matching")
    if cmd in ("sinkhorn", "sm") and not has_input:
        out.append("input: required for " + cmd)
    if cmd in ("perm", "balance", "gaussian") and not has_input and "environment" not in config:
        out.append(f"input: {cmd} needs input/matrix or environment")
    if cmd in ("llp", "matching") and "environment" not in config:
        out.append(f"environment: required for {cmd}")
    if needs_ns_with_env and "environment" in config and not has_input and "ns" not in config:
        out.append(f"ns: required for {cmd} with an environment")
    if cmd == "bounds" and not has_input and "ns" not in config:
        out.append("ns: bounds needs ns or input")

    if cmd == "llp" and env is not None and environments.analytic_scaling_mean(env) is None:
        out.append("environment: no closed-form scaling mean for this environment")
    if cmd == "llp" and ns and max(ns) > 30 and "samples" not in config:
        out.append("samples: required when ns exceed 30 (estimator fallback)")
    if cmd in ("gaussian", "matching"):
        if "samples" in config and _is_num(config["samples"]) and config["samples"] < 2:
            out.append("samples: must be at least 2")
        if ns and max(ns) > randomized.EXACT_TARGET_MAX_N:
            out.append(f"ns: must not exceed {randomized.EXACT_TARGET_MAX_N} (exact target)")
    if cmd == "matching" and env is not None and env.value_range()[1] > 1:
        out.append("environment: values must not exceed 1 for edge probabilities")

    if cmd == "balance":
        lam = config.get("lambda", env.lam if env is not None else None)
        if lam is None and has_input:
            out.append("lambda: required for balance on an input matrix")
        eps = config.get("epsilon")
        if _is_num(eps) and not eps < 1:
            out.append("epsilon: must lie in (0, 1)")
        if _is_num(eps) and _is_num(lam) and not 4 * lam * eps < 1:
            out.append(f"epsilon: 4*lambda*epsilon < 1 required (got {4 * lam * eps:g})")
    if cmd == "bounds" and "ns" in config and not (_is_num(config.get("lambda")) and config["lambda"] > 1):
        out.append("lambda: bounds over ns needs lambda > 1")
    return out


def load_config(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return (data if data is not None else {}), path.parent


# -- experiments -------------------------------------------------------------------


def _row(cfg, **kw):
    row = dict.fromkeys(COLUMNS)
    row.update(command=cfg.command, label="", config_hash=cfg.config_hash())
    row.update(kw)
    return row


def _units(cfg):
    """(n, seed, matrix, env) work units: the input matrix once, or Box_n per (n, seed)."""
    if cfg.input is not None or cfg.matrix is not None:
        a = cfg.load_input()
        return [(a.shape[0], cfg.seeds[0], a, None)]
    env = environments.environment_from_dict(cfg.environment)
    return [(n, s, box_matrix_for(env, n, s), env.with_seed(s)) for n in cfg.ns for s in cfg.seeds]


def box_matrix_for(env, n, seed):
    return environments.box_matrix(env.with_seed(seed), n)


def _run_perm(cfg, ctx):
    rows = []
    for n, seed, a, _ in _units(cfg):
        lp = matrix.perm_ryser(a)
        per = matrix.per_from_log(lp, n) if not lp.is_zero else 0.0
        rows.append(_row(cfg, label="ryser", n=n, seed=seed, log_perm=lp.log_magnitude, per=per))
    return rows


def _run_sinkhorn(cfg, ctx):
    a = cfg.load_input()
    dec = scaling.sinkhorn(a, cfg.tol, cfg.max_iter)
    ctx["files"]["decomposition.txt"] = scaling.format_decomposition(dec)
    n = a.shape[0]
    sm = scaling.geometric_mean(dec.d) * scaling.geometric_mean(dec.e) / n
    return [_row(cfg, label=f"iterations={dec.iterations}", n=n, seed=cfg.seeds[0], residual=dec.residual, sm=sm)]


def _run_sm(cfg, ctx):
    a = cfg.load_input()
    n = a.shape[0]
    sm = scaling.scaling_mean(a, cfg.tol, cfg.max_iter)
    rows = [_row(cfg, label="sinkhorn", n=n, seed=cfg.seeds[0], sm=sm)]
    if np.all(a > 0):
        direct = scaling.scaling_mean_direct(a, cfg.iters)
        rows.append(_row(cfg, label="direct", n=n, seed=cfg.seeds[0], sm=direct, ratio=direct / sm))
    return rows


def _run_balance(cfg, ctx):
    rows, logs = [], []
    for n, seed, a, env in _units(cfg):
        lam = cfg.lam if cfg.lam is not None else env.lam
        eps = cfg.epsilon if cfg.epsilon is not None else balance.fit_epsilon(a)
        res = balance.ds_approximate(a, eps, lam)
        logs.append(f"# n={n} seed={seed} epsilon={eps:.17g} lambda={lam:.17g}\n" + balance.format_stage_log(res.stage_log))
        rows.append(
            _row(cfg, label=f"epsilon={eps:.6g}", n=n, seed=seed, l1_distance=res.l1_distance,
                 bound_lhs=res.l1_distance, bound_rhs=res.l1_bound)
        )
    ctx["files"]["stage_log.txt"] = "".join(logs)
    return rows


def _run_llp(cfg, ctx):
    env = environments.environment_from_dict(cfg.environment)
    rows = []
    for rec in environments.llp_seed_sweep(env, cfg.ns, cfg.seeds, bgg_samples=cfg.samples):
        rows.append(_row(cfg, label=rec.method, n=rec.n, seed=rec.seed, log_perm=rec.log_perm,
                         per=rec.per_value, sm=rec.sm_reference, ratio=rec.ratio))
    return rows


def _run_bounds(cfg, ctx):
    rows = []
    seed = cfg.seeds[0]
    for n in cfg.ns:
        lower, upper = matrix.vdw_bounds(n, log=True)
        rows.append(_row(cfg, label="vdw", n=n, seed=seed, bound_lhs=lower, bound_rhs=upper))
        ub = matrix.stochastic_upper_bound(n, cfg.lam)
        rows.append(_row(cfg, label="stochastic", n=n, seed=seed, bound_lhs=matrix.log_factorial(n),
                         bound_rhs=ub.log_magnitude))
    if cfg.input is not None or cfg.matrix is not None:
        a = cfg.load_input()
        n = a.shape[0]
        lp = matrix.perm_ryser(a).log_magnitude
        if np.isin(a, (0.0, 1.0)).all() and np.all(a.sum(axis=1) >= 1):
            rows.append(_row(cfg, label="bregman_minc", n=n, seed=seed, log_perm=lp, bound_lhs=lp,
                             bound_rhs=matrix.bregman_minc_bound(a).log_magnitude))
        if cfg.lam is not None and cfg.lam > 1 and np.allclose(a.sum(axis=1), n) and a.max() <= cfg.lam:
            rows.append(_row(cfg, label="stochastic_matrix", n=n, seed=seed, log_perm=lp, bound_lhs=lp,
                             bound_rhs=matrix.stochastic_upper_bound(n, cfg.lam).log_magnitude))
    return rows


def _mc_row(cfg, n, seed, summary, label):
    return _row(cfg, label=label, n=n, seed=seed, log_perm=math.log(summary.target) if summary.target > 0 else None,
                mc_mean=summary.mean, mc_stderr=summary.stderr, z=summary.z_score)


def _run_gaussian(cfg, ctx):
    rows = []
    if cfg.input is not None or cfg.matrix is not None:
        a = cfg.load_input()
        units = [(a.shape[0], s, a) for s in cfg.seeds]
    else:
        env = environments.environment_from_dict(cfg.environment)
        units = [(n, s, box_matrix_for(env, n, s)) for n in cfg.ns for s in cfg.seeds]
    for n, seed, a in units:
        rows.append(_mc_row(cfg, n, seed, randomized.bgg_estimate(a, cfg.samples, seed), "bgg"))
    return rows


def _run_matching(cfg, ctx):
    env = environments.environment_from_dict(cfg.environment)
    rows = []
    for n in cfg.ns:
        for seed in cfg.seeds:
            s = randomized.matching_expectation_experiment(env.with_seed(seed), n, cfg.samples, seed)
            rows.append(_mc_row(cfg, n, seed, s, "matching"))
    return rows


RUNNERS = {
    "perm": _run_perm, "sinkhorn": _run_sinkhorn, "sm": _run_sm, "balance": _run_balance, "llp": _run_llp,
    "bounds": _run_bounds, "gaussian": _run_gaussian, "matching": _run_matching,
}


# -- output --------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def format_csv(rows, timestamp: str | None = None) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {timestamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def _summary(cfg, rows, timestamp):
    numeric = [c for c in COLUMNS[4:-1] if any(r[c] is not None for r in rows)]
    by_n = {}
    for n in sorted({r["n"] for r in rows}):
        sel = [r for r in rows if r["n"] == n]
        agg = {"rows": len(sel)}
        for c in numeric:
            vals = np.array([r[c] for r in sel if r[c] is not None], dtype=float)
            if vals.size:
                agg[f"{c}_mean"] = float(vals.mean())
                if c == "ratio":
                    agg["abs_ratio_minus_1_mean"] = float(np.abs(vals - 1).mean())
        by_n[str(n)] = agg
    out = {"command": cfg.command, "config_hash": cfg.config_hash(), "rows": len(rows), "by_n": by_n}
    if timestamp:
        out["generated"] = timestamp
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def _plot_script(cfg):
    y = PLOT_Y[cfg.command]
    return (
        "# gnuplot script for results.csv\n"
        f"# columns: {', '.join(COLUMNS)}\n"
        f"# plots {y} against n for command {cfg.command}\n"
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'n'\n"
        f"set ylabel '{y}'\n"
        f"plot 'results.csv' using (column('n')):(column('{y}')) with points pt 7 title '{y}'\n"
    )


def run(config, out_dir=None, timestamp: bool = True, base_dir=".") -> int:
    """Validate and execute one experiment; write its output files; return the exit status."""
    problems = validate(config)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    cfg = ExperimentConfig.from_dict(config, base_dir)
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    ctx = {"files": {}}
    try:
        rows = RUNNERS[cfg.command](cfg, ctx)
    except (PermlawError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    rows.sort(key=lambda r: (r["command"], r["n"], r["seed"], r["label"]))
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if timestamp else None
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "results.csv": format_csv(rows, stamp),
        "summary.json": _summary(cfg, rows, stamp),
        "plot.gp": _plot_script(cfg),
        **ctx["files"],
    }
    for name, text in files.items():
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="permlaw", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML experiment config")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    args = parser.parse_args(argv)
    try:
        config, base = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if isinstance(config, dict):
        if config.get("command", args.command) != args.command:
            print(f"config error: command: config says {config['command']!r}, CLI says {args.command!r}", file=sys.stderr)
            return 2
        config = {"command": args.command, **config}
    return run(config, args.out, timestamp=not args.no_timestamp, base_dir=base)


if __name__ == "__main__":
    sys.exit(main())
