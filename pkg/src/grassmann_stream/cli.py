"""Command-line front end: seeded experiment commands with CSV/JSON artifacts.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 runtime/generation failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import datagen, harness, theory

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


def _fmt(value) -> str:
    """Round-trip serialization: 17 significant digits for floats."""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(format(float(obj), ".17g"))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _trial_config(cfg: dict, seed_override: int | None) -> harness.TrialConfig:
    fields = {f.name for f in dataclasses.fields(harness.TrialConfig)}
    unknown = set(cfg) - fields - {"sweep", "verify", "bounds", "monte_carlo"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in cfg.items() if k in fields}
    if seed_override is not None:
        kwargs["seed"] = seed_override
    elif "seed" not in kwargs and os.environ.get("GS_SEED"):
        kwargs["seed"] = int(os.environ["GS_SEED"])
    try:
        return harness.TrialConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_run(cfg: dict, args) -> int:
    config = _trial_config(cfg, args.seed)
    series = harness.run_trial(config)
    out = Path(args.out)
    rows = []
    if series.records:
        n_rows = len(series.records["t"])
        status_col = [
            harness.STATUS_NAMES[int(c)] for c in series.records["status"]
        ]
        for i in range(n_rows):
            rows.append(
                [
                    series.records["t"][i],
                    *(series.records[c][i] for c in harness.SERIES_COLUMNS[1:-1]),
                    status_col[i],
                ]
            )
    _write_csv(out / "series.csv", harness.SERIES_COLUMNS, rows)
    summary = {
        "config": dataclasses.asdict(config),
        "converged": series.converged,
        "iterations_to_target": series.iterations,
        "final_zeta": series.final_zeta,
        "wall_time_s": series.wall_time,
        "metadata": series.metadata,
    }
    _write_json(out / "summary.json", summary)
    if args.format == "json":
        print(json.dumps(_jsonable(summary)))
    else:
        print(
            f"run: converged={series.converged} "
            f"iterations={series.iterations} final_zeta={_fmt(series.final_zeta)}"
        )
    return EXIT_OK


def _cmd_sweep(cfg: dict, args) -> int:
    sweep_cfg = cfg.get("sweep")
    if not isinstance(sweep_cfg, dict):
        raise ConfigError("sweep command needs a 'sweep' object in the config")
    base = _trial_config(cfg, args.seed)
    ns = sweep_cfg.get("ns", [base.n])
    ds = sweep_cfg.get("ds", [base.d])
    ms = sweep_cfg.get("ms", [base.m])
    trials = int(sweep_cfg.get("trials_per_cell", 10))
    grid = [(int(n), int(d), None if m is None else int(m)) for n in ns for d in ds for m in ms]
    if not grid or trials < 1:
        raise ConfigError("sweep grid must be non-empty with trials_per_cell >= 1")
    bound_kind = sweep_cfg.get("bound", "heuristic")
    if bound_kind == "heuristic":
        def bound_fn(n, d, m):
            return theory.heuristic_iterations(n, n if m is None else m, d, base.zeta_star)
    elif bound_kind == "full_iteration":
        rho = float(sweep_cfg.get("rho", 0.1))
        def bound_fn(n, d, m):
            return theory.iteration_bound_full(n, d, rho, base.zeta_star).value
    else:
        raise ConfigError(f"unknown sweep bound {bound_kind!r}")
    cells = harness.sweep(base, grid, trials, bound_fn, jobs=args.jobs)
    out = Path(args.out)
    header = ("n", "d", "m", "mean_ratio", "var_ratio", "fail_frac")
    rows = [
        (c.n, c.d, "" if c.m is None else c.m, c.mean_ratio, c.var_ratio, c.fail_frac)
        for c in cells
    ]
    _write_csv(out / "grid.csv", header, rows)
    _write_json(
        out / "summary.json",
        {
            "config": dataclasses.asdict(base),
            "sweep": sweep_cfg,
            "cells": [dataclasses.asdict(c) for c in cells],
        },
    )
    if args.format == "json":
        print(json.dumps(_jsonable([dataclasses.asdict(c) for c in cells])))
    else:
        print(f"sweep: {len(cells)} cells written to grid.csv")
    return EXIT_OK


def _cmd_verify(cfg: dict, args) -> int:
    verify_cfg = cfg.get("verify", {})
    if not isinstance(verify_cfg, dict):
        raise ConfigError("'verify' must be an object when present")
    config = _trial_config(cfg, args.seed)
    config = dataclasses.replace(config, diagnostics_level="full")
    num_steps = int(verify_cfg.get("num_steps", 200))
    report = harness.verify_step_invariants(config, num_steps)
    report["config"] = dataclasses.asdict(config)
    report["num_steps"] = num_steps
    out = Path(args.out)
    _write_json(out / "verify.json", report)
    if args.format == "json":
        print(json.dumps(_jsonable(report)))
    else:
        for name, res in report["identities"].items():
            print(
                f"{name}: max_violation={_fmt(res['max_violation'])} "
                f"tol={_fmt(res['tolerance'])} "
                f"{'ok' if res['passed'] else 'VIOLATED'}"
            )
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


def _cmd_bounds(cfg: dict, args) -> int:
    bounds_cfg = dict(cfg.get("bounds", {}))
    if not isinstance(bounds_cfg, dict):
        raise ConfigError("'bounds' must be an object when present")
    try:
        n = int(cfg.get("n", bounds_cfg.get("n", 5000)))
        d = int(cfg.get("d", bounds_cfg.get("d", 10)))
        m = cfg.get("m", bounds_cfg.get("m"))
        m = n if m is None else int(m)
        rho = float(bounds_cfg.get("rho", 0.1))
        zeta_star = float(cfg.get("zeta_star", bounds_cfg.get("zeta_star", 1.0 - 1e-4)))
        zeta = float(bounds_cfg.get("zeta", 0.5))
        delta = float(bounds_cfg.get("delta", 0.25))
        phi_d = float(bounds_cfg.get("phi_d", 0.1))
        mu0 = float(bounds_cfg.get("mu0", 1.0))
        mu_vperp = float(bounds_cfg.get("mu_vperp", 1.0))
        kappa = float(bounds_cfg.get("kappa", 1.0 - zeta))
        iteration = theory.iteration_bound_full(n, d, rho, zeta_star)
        rate_cs = theory.expected_rate_cs(zeta, d, m, n, delta, phi_d)
        rate_missing = theory.expected_rate_missing(zeta, d, m, n)
        payload = {
            "params": {
                "n": n, "d": d, "m": m, "rho": rho, "zeta_star": zeta_star,
                "zeta": zeta, "delta": delta, "phi_d": phi_d, "mu0": mu0,
                "mu_vperp": mu_vperp, "kappa": kappa,
            },
            "iteration_bound_full": {
                "value": iteration.value, **iteration.components,
            },
            "heuristic_iterations": theory.heuristic_iterations(n, m, d, zeta_star),
            "expected_rate_full": theory.expected_rate_full(zeta, d),
            "expected_rate_cs": {
                "rate": rate_cs.rate,
                "probability": rate_cs.probability,
                **rate_cs.params,
            },
            "expected_rate_missing": {
                "rate": rate_missing.rate,
                "probability": rate_missing.probability,
            },
            "sample_complexity_missing": {
                "value": theory.sample_complexity_missing(d, mu0, mu_vperp, n).value,
                **theory.sample_complexity_missing(d, mu0, mu_vperp, n).components,
            },
            "discrepancy_decay_missing": theory.discrepancy_decay_missing(
                kappa, d, m, n, mu0
            ),
            "expected_initial_similarity": theory.expected_zeta0(n, d),
        }
        if 0.0 < delta < 0.5:
            cs = theory.sample_complexity_cs(d, delta, phi_d, n)
            payload["sample_complexity_cs"] = {"value": cs.value, **cs.components}
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    _write_json(out / "bounds.json", payload)
    if args.format == "json":
        print(json.dumps(_jsonable(payload)))
    else:
        for key, value in payload.items():
            if isinstance(value, dict):
                inner = " ".join(f"{k}={_fmt(v)}" for k, v in value.items())
                print(f"{key}: {inner}")
            else:
                print(f"{key}: {_fmt(value)}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "bounds": _cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grassmann-stream",
        description="Streaming subspace estimation experiments and bound evaluators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize anything else.
        return EXIT_USAGE if exc.code != 0 else EXIT_OK
    try:
        cfg = _load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except datagen.GenerationFailed as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - boundary: everything maps to an exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
