"""Config-driven experiment runner.

Usage:
    gibbslab run <config.json> [--out DIR] [--threads N]
    gibbslab validate <config.json>

Each experiment reads a JSON config (unknown keys rejected), writes CSV
artifacts with fixed schemas plus a run manifest, and exits 0 only if every
asserted invariant passed (2 on assertion failure, 3 on config errors).
CSV bodies are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, approxdavies, davies, models, numerics, protocol, specfun
from .errors import ConfigError, GibbsLabError
from .promises import PromiseFamily

EXPERIMENTS = (
    "fixed_point",
    "gap_sweep",
    "ensemble",
    "end_to_end",
    "adversarial",
    "poly_check",
    "resource",
)

COMMON_KEYS = {"experiment", "seed", "out_dir", "threads"}

EXPERIMENT_KEYS = {
    "fixed_point": {"models", "random_models", "betas", "filter"},
    "gap_sweep": {"model", "beta", "filter", "promise", "gamma_grid"},
    "ensemble": {"dim", "model_seeds", "n_grid", "r_grid", "betas", "branches"},
    "end_to_end": {"model", "beta", "filter", "promise", "gamma", "mode", "t", "t_policy",
                   "tolerances"},
    "adversarial": {"q", "n", "alpha_grid", "m_med_grid", "beta", "filter"},
    "poly_check": {"kappa_grid", "delta_grid"},
    "resource": {"n", "r", "gamma", "t", "delta_L", "beta", "eps"},
}

TOLERANCE_KEYS = {"delta_sup", "delta_leak", "delta_est", "delta_fail"}


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, fieldnames: list, rows: list) -> int:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in fieldnames])
    return len(rows)


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    return config


def validate_config(config: dict) -> list:
    """Fail-closed schema check; returns human-readable diagnostics."""
    notes = []
    experiment = config.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    allowed = COMMON_KEYS | EXPERIMENT_KEYS[experiment]
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {sorted(unknown)}")
    if "seed" not in config:
        raise ConfigError("missing required field: seed")
    for key, value in config.get("tolerances", {}).items():
        if key not in TOLERANCE_KEYS:
            raise ConfigError(f"unknown tolerance {key!r}")
        if not 0 < value < 1:
            raise ConfigError(f"tolerance {key}={value} outside (0, 1)")
    promise = config.get("promise", {})
    n = int(promise.get("n", config.get("n", 2)))
    r = int(promise.get("r", config.get("r", 1)))
    if n + r > 14:
        notes.append(f"SizeExceeded: n+r = {n + r} > 14 blows the superoperator budget")
    dim = None
    if "model" in config:
        kind = config["model"].get("kind")
        if kind == "tfim":
            dim = 2 ** (int(config["model"]["n1"]) * int(config["model"]["n2"]))
        elif kind == "adversarial":
            dim = 2 ** int(config["model"]["q"])
        elif kind == "random_diag":
            dim = int(config["model"]["dim"])
    elif "dim" in config:
        dim = int(config["dim"])
    elif "q" in config:
        dim = 2 ** int(config["q"])
    if dim is not None:
        notes.append(f"superoperator dimension: {dim**2} x {dim**2}")
        if dim > 64:
            notes.append(f"SizeExceeded: dim {dim} above the desk-scale cap 64")
    if experiment == "end_to_end" or "promise" in config:
        est = davies.resource_estimate(
            n=n, r=r,
            gamma=float(config.get("gamma", 0.05)),
            t=float(config.get("t", 1.0) if not isinstance(config.get("t"), dict) else 1.0),
            delta_L=1e-3,
            beta=float(config.get("beta", 1.0)),
            eps=0.25,
        )
        notes.append(f"constant-1 H-query estimate per run: {est['h_queries_per_run']:.3e}")
    return notes


def _gamma_grid(spec) -> list:
    if isinstance(spec, list):
        return [float(g) for g in spec]
    if isinstance(spec, dict):
        grid = np.geomspace(float(spec["log_min"]), float(spec["log_max"]), int(spec["num"]))
        return [float(g) for g in grid]
    raise ConfigError(f"gamma_grid must be a list or {{log_min, log_max, num}}, got {spec!r}")


def _parallel_map(fn, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# experiment implementations: each returns (checks, files)
# ---------------------------------------------------------------------------

def _expand_models(config: dict) -> list:
    specs = [dict(m) for m in config.get("models", [])]
    random_spec = config.get("random_models")
    if random_spec:
        for i in range(int(random_spec["count"])):
            specs.append(
                {
                    "kind": "random_diag",
                    "dim": int(random_spec["dim"]),
                    "seed": int(random_spec["base_seed"]) + i,
                    "min_gap": float(random_spec.get("min_gap", 0.0)),
                }
            )
    if not specs:
        raise ConfigError("fixed_point needs 'models' and/or 'random_models'")
    return specs


def run_fixed_point(config: dict, out: Path, threads: int):
    betas = [float(b) for b in config.get("betas", [1.0])]
    kind = config.get("filter", "metropolis")
    cells = [(spec, beta) for spec in _expand_models(config) for beta in betas]

    def work(cell):
        spec, beta = cell
        model = models.from_config(spec)
        filt = davies.FilterFunction(kind, beta)
        L = davies.ideal_davies(model, filt)
        rho = numerics.gibbs_state(model.spectrum(), beta)
        return {
            "model": model.kind,
            "dim": model.dim,
            "params": json.dumps(spec, sort_keys=True),
            "beta": beta,
            "filter": kind,
            "residual": davies.fixed_point_residual(L, rho),
            "kernel_dim": numerics.kernel_dimension(L.superop),
        }

    rows = _parallel_map(work, cells, threads)
    count = write_csv(
        out / "fixed_point.csv",
        ["model", "dim", "params", "beta", "filter", "residual", "kernel_dim"],
        rows,
    )
    checks = [
        ("residual<=1e-9", all(row["residual"] <= 1e-9 for row in rows)),
        ("kernel_dim==1", all(row["kernel_dim"] == 1 for row in rows)),
    ]
    return checks, [("fixed_point.csv", count)]


GAP_SWEEP_FIELDS = [
    "model", "n1", "n2", "v", "beta", "filter", "branch", "n", "r", "j",
    "gamma", "gap", "gap_ideal", "kernel_dim", "residual",
]


def run_gap_sweep(config: dict, out: Path, threads: int):
    model = models.from_config(config["model"])
    beta = float(config.get("beta", 10.0))
    filt = davies.FilterFunction(config.get("filter", "metropolis"), beta)
    promise = config["promise"]
    branches = promise.get("branches", ["L", "R"])
    grid = _gamma_grid(config["gamma_grid"])

    def work(branch):
        family = PromiseFamily.build(int(promise["n"]), int(promise["r"]), branch)
        return davies.gap_sweep(model, filt, family, grid)

    rows = [row for chunk in _parallel_map(work, list(branches), threads) for row in chunk]
    count = write_csv(out / "gap_sweep.csv", GAP_SWEEP_FIELDS, rows)
    checks = [
        ("all_mixing", all(row["kernel_dim"] == 1 for row in rows)),
        ("gaps_positive", all(row["gap"] > 0 for row in rows)),
    ]
    return checks, [("gap_sweep.csv", count)]


ENSEMBLE_FIELDS = [
    "seed", "dim", "beta", "n", "r", "branch", "dist_avg", "dist_exact_avg",
    "dist_rounding", "bound_thm", "bound_47", "bound_48", "violations",
]


def run_ensemble(config: dict, out: Path, threads: int):
    dim = int(config.get("dim", 16))
    seeds_spec = config.get("model_seeds", {"count": 10, "base_seed": int(config["seed"])})
    if isinstance(seeds_spec, dict):
        seeds = [int(seeds_spec["base_seed"]) + i for i in range(int(seeds_spec["count"]))]
    else:
        seeds = [int(s) for s in seeds_spec]
    n_grid = [int(n) for n in config.get("n_grid", [4])]
    r_grid = [int(r) for r in config.get("r_grid", [2])]
    betas = [float(b) for b in config.get("betas", [1.0])]
    branches = list(config.get("branches", ["L", "R"]))

    families = {
        (n, r, br): PromiseFamily.build(n, r, br)
        for n in n_grid for r in r_grid for br in branches
    }

    def work(seed):
        model = models.random_diag(dim, seed)
        chunk = []
        for (n, r, br), family in families.items():
            for beta in betas:
                rep = protocol.ensemble_report(model, family, beta, strict=False)
                chunk.append(
                    {
                        "seed": seed,
                        "dim": dim,
                        "beta": beta,
                        "n": n,
                        "r": r,
                        "branch": br,
                        "dist_avg": rep.dist_avg,
                        "dist_exact_avg": rep.dist_exact_avg,
                        "dist_rounding": rep.dist_rounding,
                        "bound_thm": rep.bound_thm,
                        "bound_47": rep.bound_47,
                        "bound_48": rep.bound_48,
                        "violations": rep.violations,
                    }
                )
        return chunk

    rows = [row for chunk in _parallel_map(work, seeds, threads) for row in chunk]
    count = write_csv(out / "ensemble.csv", ENSEMBLE_FIELDS, rows)
    checks = [("zero_violations", all(row["violations"] == 0 for row in rows))]
    return checks, [("ensemble.csv", count)]


END_TO_END_FIELDS = [
    "seed", "beta", "n", "r", "branch", "gamma", "t", "distance", "bound", "eps_mix",
]


def run_end_to_end(config: dict, out: Path, threads: int):
    model = models.from_config(config["model"])
    beta = float(config.get("beta", 1.0))
    filter_kind = config.get("filter", "metropolis")
    promise = config["promise"]
    n, r = int(promise["n"]), int(promise["r"])
    family = PromiseFamily.build(n, r, promise.get("branch", "L"))
    gamma = float(config.get("gamma", 0.05))
    mode = config.get("mode", "exact")
    tol = config.get("tolerances", {})
    seed = int(config["seed"])

    t_spec = config.get("t", config.get("t_policy"))
    if isinstance(t_spec, dict):
        filt = davies.FilterFunction(filter_kind, beta)
        gaps = [
            protocol.min_promised_gap(
                model, filt, PromiseFamily.build(n, r, br), gamma
            )
            for br in ("L", "R")
        ]
        t = float(t_spec.get("factor", 50.0)) / min(gaps)
    else:
        t = float(t_spec)

    rep = protocol.end_to_end(
        model, family, beta, gamma, t, mode, np.random.default_rng(seed),
        delta_sup=float(tol.get("delta_sup", 1e-3)),
        delta_fail=float(tol.get("delta_fail", 1e-3)),
        delta_leak=float(tol.get("delta_leak", 1e-8)),
        filter_kind=filter_kind,
    )
    rows = [
        {
            "seed": seed,
            "beta": beta,
            "n": rep.n,
            "r": rep.r,
            "branch": rep.branch,
            "gamma": gamma,
            "t": t,
            "distance": rep.distance,
            "bound": rep.bound,
            "eps_mix": rep.eps_mix,
        }
    ]
    count = write_csv(out / "end_to_end.csv", END_TO_END_FIELDS, rows)
    checks = [("distance<=bound+1e-3", rep.distance <= rep.bound + 1e-3)]
    return checks, [("end_to_end.csv", count)]


ADVERSARIAL_FIELDS = [
    "q", "n", "alpha", "m_med", "beta", "seed", "distance", "residual", "kernel_dim",
]


def run_adversarial(config: dict, out: Path, threads: int):
    rows = approxdavies.adversarial_sweep(
        q=int(config.get("q", 4)),
        n=int(config.get("n", 3)),
        alpha_grid=[float(a) for a in config.get("alpha_grid", [0, 0.25, 0.5, 0.75, 1])],
        m_med_grid=[int(m) for m in config.get("m_med_grid", [1, 3, 5])],
        beta=float(config.get("beta", 5.0)),
        seed=int(config["seed"]),
        filter_kind=config.get("filter", "metropolis"),
    )
    count = write_csv(out / "adversarial.csv", ADVERSARIAL_FIELDS, rows)
    exact_rows = [row for row in rows if row["alpha"] == 0.0]
    checks = [
        ("alpha0_exact", all(row["distance"] <= 1e-6 for row in exact_rows)),
        ("all_mixing", all(row["kernel_dim"] == 1 for row in rows)),
    ]
    return checks, [("adversarial.csv", count)]


POLY_FIELDS = [
    "kappa", "delta", "degree", "left_err", "right_err", "range_lo", "range_hi",
    "proj_err", "law",
]


def run_poly_check(config: dict, out: Path, threads: int):
    kappa_grid = [float(k) for k in config.get("kappa_grid", [0.05, 0.1, 0.2])]
    delta_grid = [float(d) for d in config.get("delta_grid", [1e-2, 1e-4, 1e-6])]
    rows = []
    for kappa in kappa_grid:
        for delta in delta_grid:
            theta = specfun.step_poly(kappa, delta)
            grid = np.linspace(-2.0, 2.0, 10001)
            vals = theta(grid)
            left = float(np.max(vals[grid <= -kappa / 2]))
            right = float(np.min(vals[grid >= kappa / 2]))
            spec = specfun.ProfileSpec(
                intervals=((0.0, 0.3), (0.3 + kappa, 0.6), (0.6 + kappa, 1.0)),
                labels=(0, 1, 0),
                delta=delta,
            )
            proj = specfun.projection_poly(spec)
            perr = 0.0
            for (a, b), c in zip(spec.intervals, spec.labels):
                pts = np.linspace(a, b, 3001)
                perr = max(perr, float(np.max(np.abs(proj(pts) - c))))
            rows.append(
                {
                    "kappa": kappa,
                    "delta": delta,
                    "degree": theta.degree,
                    "left_err": left,
                    "right_err": 1.0 - right,
                    "range_lo": float(vals.min()),
                    "range_hi": float(vals.max()),
                    "proj_err": perr,
                    "law": theta.degree * kappa / math.log(1.0 / delta),
                }
            )
    count = write_csv(out / "poly_check.csv", POLY_FIELDS, rows)
    laws = [row["law"] for row in rows]
    checks = [
        ("step_errors", all(row["left_err"] <= row["delta"] and row["right_err"] <= row["delta"]
                            for row in rows)),
        ("ranges", all(row["range_lo"] >= -1e-9 and row["range_hi"] <= 1 + 1e-9 for row in rows)),
        ("projection_errors", all(row["proj_err"] <= row["delta"] for row in rows)),
        ("degree_law_factor<=3", max(laws) / min(laws) <= 3.0),
    ]
    return checks, [("poly_check.csv", count)]


def run_resource(config: dict, out: Path, threads: int):
    est = davies.resource_estimate(
        n=float(config["n"]), r=float(config["r"]), gamma=float(config["gamma"]),
        t=float(config["t"]), delta_L=float(config["delta_L"]),
        beta=float(config["beta"]), eps=float(config["eps"]),
    )
    fields = ["convention", "h_queries_per_run", "h_queries_total", "suggested_n", "suggested_r"]
    count = write_csv(out / "resource.csv", fields, [est])
    return [("resource_evaluated", True)], [("resource.csv", count)]


RUNNERS = {
    "fixed_point": run_fixed_point,
    "gap_sweep": run_gap_sweep,
    "ensemble": run_ensemble,
    "end_to_end": run_end_to_end,
    "adversarial": run_adversarial,
    "poly_check": run_poly_check,
    "resource": run_resource,
}


def run(config_path, out_dir=None, threads=None) -> int:
    """Execute a config; returns the process exit code."""
    try:
        config = load_config(config_path)
        validate_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    out = Path(out_dir or os.environ.get("OUT_DIR") or config.get("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    nthreads = int(threads or os.environ.get("THREADS") or config.get("threads", 1))
    start = time.time()
    checks, files, error = [], [], None
    try:
        checks, files = RUNNERS[config["experiment"]](config, out, nthreads)
    except GibbsLabError as exc:
        error = f"{type(exc).__name__}: {exc}"
        checks = [("experiment_completed", False)]
    manifest = {
        "config": config,
        "version": __version__,
        "wall_time_s": round(time.time() - start, 3),
        "error": error,
        "checks": [{"name": name, "passed": bool(ok)} for name, ok in checks],
        "files": [{"name": name, "rows": rows} for name, rows in files],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    failed = [name for name, ok in checks if not ok]
    for name, ok in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    if error:
        print(f"error: {error}", file=sys.stderr)
    return 2 if failed else 0


def validate(config_path) -> int:
    try:
        config = load_config(config_path)
        notes = validate_config(config)
    except ConfigError as exc:
        print(f"invalid: {exc}")
        return 0
    print("ok")
    for note in notes:
        print(note)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gibbslab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run an experiment config")
    runp.add_argument("config")
    runp.add_argument("--out", default=None)
    runp.add_argument("--threads", type=int, default=None)
    valp = sub.add_parser("validate", help="check a config without running")
    valp.add_argument("config")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, out_dir=args.out, threads=args.threads)
    return validate(args.config)


if __name__ == "__main__":
    sys.exit(main())
