"""Command-line experiment harness.

Subcommands: `solve` (one configured solve), `sweep` (cartesian parameter
grid, heatmap data), `tune` (budgeted sequential optimization). All take
--config <json> plus dotted-path --set overrides; reports are JSON with
canonical key order (plus CSV traces), so identical configurations produce
byte-identical outputs. Exit codes: 0 success, 1 solve failure (report
still written), 2 configuration error.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import svgplot
from .problem import ExperimentConfig, run_experiment, with_noise_seed
from .tune import (KIND_CONTINUOUS, KIND_INTEGER, KIND_LOG, PARAM_FIELDS,
                   ParamDim, ParamSpace, default_space, run_sweep)
from .tune import tune as tune_space

EXIT_OK = 0
EXIT_SOLVE_FAILURE = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(Exception):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_set(doc: dict, dotted: str, value) -> None:
    if "=" not in dotted:
        raise ConfigError(f"--set expects key=value, got {dotted!r}")
    path, raw = dotted.split("=", 1)
    keys = path.split(".")
    node = doc
    for key in keys[:-1]:
        if key == "noise" and node.get("noise") is None:
            node["noise"] = {}
        if not isinstance(node.get(key), dict):
            raise ConfigError(f"unknown config section {key!r} in {path!r}")
        node = node[key]
    node[keys[-1]] = _parse_value(raw)


def load_config(args) -> ExperimentConfig:
    doc = ExperimentConfig().to_dict()
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}")
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        for section, value in loaded.items():
            doc[section] = value
    for override in args.set or []:
        _apply_set(doc, override, None)
    try:
        config = ExperimentConfig.from_dict(doc)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))
    if args.seed is not None and config.noise is not None:
        config = with_noise_seed(config, args.seed)
    return config


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _trace_rows(report):
    return [{"k": t.k, "residual_norm": t.residual_norm,
             "beta_k": t.beta_k, "m_k": t.m_k,
             "linear_residual": (None if math.isnan(t.linear_residual)
                                 else t.linear_residual)}
            for t in report.trace]


def cmd_solve(args) -> int:
    config = load_config(args)
    os.makedirs(args.out_dir, exist_ok=True)
    report = run_experiment(config)
    payload = {
        "schema_version": config.schema_version,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "status": report.status,
        "iterations": report.iterations,
        "message": report.message,
        "trace": _trace_rows(report),
    }
    _write_json(os.path.join(args.out_dir, "solve_report.json"), payload)
    with open(os.path.join(args.out_dir, "trace.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "residual_norm", "beta_k", "m_k",
                         "linear_residual"])
        for row in _trace_rows(report):
            writer.writerow([row["k"], row["residual_norm"], row["beta_k"],
                             row["m_k"], row["linear_residual"] or ""])
    if args.plot:
        ks = [t.k for t in report.trace]
        rs = [t.residual_norm for t in report.trace]
        svgplot.line_plot([("residual", ks, rs)],
                          os.path.join(args.out_dir, "residual.svg"),
                          title="Convergence history")
    print(f"{report.status}: {report.iterations} iterations "
          f"(report in {args.out_dir})")
    return EXIT_OK if report.converged else EXIT_SOLVE_FAILURE


def _parse_grid_axis(spec: str):
    if "=" not in spec:
        raise ConfigError(f"--grid expects name=values, got {spec!r}")
    name, body = spec.split("=", 1)
    if name not in PARAM_FIELDS:
        raise ConfigError(f"unknown sweep parameter {name!r}")
    integral = name in ("m", "d")
    if ":" in body:
        parts = body.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range spec needs start:stop:step: {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("grid step must be positive")
        count = int(round((stop - start) / step)) + 1
        values = [round(start + i * step, 10) for i in range(count)
                  if start + i * step <= stop + 1e-9]
    else:
        values = [float(v) for v in body.split(",") if v != ""]
    if integral:
        values = [int(v) for v in values]
    if not values:
        raise ConfigError(f"empty grid axis {spec!r}")
    return name, values


def cmd_sweep(args) -> int:
    config = load_config(args)
    if not args.grid:
        raise ConfigError("sweep requires at least one --grid axis")
    grid = {}
    for spec in args.grid:
        name, values = _parse_grid_axis(spec)
        grid[name] = values
    os.makedirs(args.out_dir, exist_ok=True)
    jobs = args.jobs or os.cpu_count() or 1
    records = run_sweep(grid, config, jobs=jobs,
                                 root_seed=args.seed)

    defaults = {"beta": config.accel.beta, "m": config.accel.m_max,
                "d": config.accel.delay}
    rows = []
    for rec in records:
        row = dict(defaults)
        row.update(rec.params)
        rows.append({
            "beta": row["beta"], "m": row["m"], "d": row["d"],
            "iterations": (int(rec.objective) if rec.converged else None),
            "status": rec.status,
        })
    with open(os.path.join(args.out_dir, "sweep.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "m", "d", "iterations", "status"])
        for row in rows:
            writer.writerow([row["beta"], row["m"], row["d"],
                             "" if row["iterations"] is None
                             else row["iterations"], row["status"]])
    payload = {
        "schema_version": config.schema_version,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "grid": grid,
        "root_seed": args.seed,
        "cells": rows,
    }
    _write_json(os.path.join(args.out_dir, "sweep.json"), payload)

    if args.plot and "beta" in grid and "m" in grid:
        ds = grid.get("d", [defaults["d"]])
        for d in ds:
            values = [[next((r["iterations"] for r in rows
                             if r["beta"] == b and r["m"] == m
                             and r["d"] == d), None)
                       for b in grid["beta"]] for m in grid["m"]]
            name = f"sweep_heatmap_d{d}.svg"
            svgplot.heatmap([f"{b:g}" for b in grid["beta"]],
                            [str(m) for m in grid["m"]], values,
                            os.path.join(args.out_dir, name),
                            title=f"Iterations to tolerance (d = {d})",
                            xlabel="beta", ylabel="m")
    n_conv = sum(1 for r in rows if r["iterations"] is not None)
    print(f"sweep: {n_conv}/{len(rows)} cells converged "
          f"(results in {args.out_dir})")
    return EXIT_OK


def _parse_dim(spec: str) -> ParamDim:
    if "=" not in spec:
        raise ConfigError(f"--dim expects name=lower:upper[:kind]: {spec!r}")
    name, body = spec.split("=", 1)
    parts = body.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"--dim expects name=lower:upper[:kind]: {spec!r}")
    lower, upper = float(parts[0]), float(parts[1])
    kind = {"int": KIND_INTEGER, "log": KIND_LOG,
            "cont": KIND_CONTINUOUS}.get(
        parts[2] if len(parts) == 3 else "cont")
    if kind is None:
        raise ConfigError(f"unknown dim kind in {spec!r}")
    return ParamDim(name, kind, lower, upper)


def cmd_tune(args) -> int:
    config = load_config(args)
    try:
        n_initial, n_total = (int(v) for v in args.budget.split(","))
    except ValueError:
        raise ConfigError(f"--budget expects INITIAL,TOTAL: {args.budget!r}")
    if args.dim:
        space = ParamSpace(dims=[_parse_dim(s) for s in args.dim])
    else:
        space = default_space()
    dim_names = {d.name for d in space.dims}
    default_params = {"beta": config.accel.beta, "m": config.accel.m_max,
                      "d": config.accel.delay,
                      "omega_beta": config.accel.omega_beta,
                      "omega_m": config.accel.omega_m}
    include_default = {k: v for k, v in default_params.items()
                       if k in dim_names}
    os.makedirs(args.out_dir, exist_ok=True)
    try:
        result = tune_space(space, config, n_initial, n_total,
                               seed=args.seed or 0,
                               include_default=include_default)
    except ValueError as e:
        raise ConfigError(str(e))
    payload = {
        "schema_version": config.schema_version,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "space": [{"name": d.name, "kind": d.kind, "lower": d.lower,
                   "upper": d.upper} for d in space.dims],
        "budget": {"n_initial": n_initial, "n_total": n_total},
        "seed": args.seed or 0,
        "all_failed": result.all_failed,
        "best": {"params": result.best.params,
                 "objective": result.best.objective,
                 "status": result.best.status,
                 "index": result.best.index},
        "history": [{"params": r.params, "objective": r.objective,
                     "status": r.status, "index": r.index}
                    for r in result.history],
    }
    _write_json(os.path.join(args.out_dir, "tune_report.json"), payload)
    print(f"tune: best objective {result.best.objective:g} at "
          f"{result.best.params} (report in {args.out_dir})")
    return EXIT_OK if not result.all_failed else EXIT_SOLVE_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aatransport",
        description="Accelerated fixed-point transport experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--set", action="append", metavar="PATH=VALUE",
                       help="dotted-path config override (repeatable)")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="root random seed")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker pool size (default: CPU count)")
        p.add_argument("--plot", action="store_true",
                       help="also write SVG plots")

    p_solve = sub.add_parser("solve", help="run one configured solve")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="cartesian parameter sweep")
    common(p_sweep)
    p_sweep.add_argument("--grid", action="append", metavar="NAME=SPEC",
                         help="axis: name=v1,v2,... or name=start:stop:step")
    p_sweep.set_defaults(func=cmd_sweep)

    p_tune = sub.add_parser("tune", help="budgeted parameter optimization")
    common(p_tune)
    p_tune.add_argument("--budget", default="10,50", metavar="INITIAL,TOTAL")
    p_tune.add_argument("--dim", action="append", metavar="NAME=LO:HI[:KIND]",
                        help="space dimension (default: beta, m, d)")
    p_tune.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
