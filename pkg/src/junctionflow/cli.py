"""Command-line driver: config ingestion, run orchestration, disk artifacts.

Configs are flat `key = value` lines with dotted sections; unknown keys are
errors.  `simulate` writes a run directory with trace.csv, snapshots/, and
meta.json; the other subcommands emit JSON reports.  Exit codes: 0 success,
2 validation or property failure, 3 continuation stop, 4 solver failure.
"""

from __future__ import annotations

import argparse
import ast
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, JunctionFlowError, Violation
from .flow import FlowConfig, default_dt, run
from .geometry import (
    make_double_bubble,
    make_from_node_table,
    make_prism,
    make_triod,
    validate_cluster,
)
from .linear import linearization_sweep, solve_eigen
from .shape import check_compatibility, evaluate_phi, make_state, shape_quantities
from .symbols import check_grid, ode_energy_check, singular_floor
from .weights import derive_angles, weights_from_angles

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STOPPED = 3
EXIT_SOLVER = 4

DT_RULE = ("base dt from flow.dt or 0.25 * min_spacing^2 / max beta, halved "
           "in powers of two as the shortest chart scale halves")

_FLOW_KEYS = ("dt", "t_end", "picard_tol", "picard_max", "reref_threshold",
              "r0", "output_every", "max_retries", "resample_ratio",
              "energy_tol")

KNOWN_KEYS = frozenset(
    ["scenario", "mesh", "scenario.areas",
     "weights.gamma", "weights.theta", "weights.beta",
     "outputs.directory", "outputs.formats", "outputs.snapshot_every",
     "eigs.k", "lincheck.n", "lscheck.samples", "lscheck.ode_samples"]
    + [f"flow.{k}" for k in _FLOW_KEYS])


def parse_config(path) -> dict:
    """Flat dotted-key config; values are Python literals or bare words."""
    cfg = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in cfg:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            cfg[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            cfg[key] = value
    if "scenario" not in cfg:
        raise ConfigError(f"{path}: missing required key 'scenario'")
    return cfg


def _triple(cfg, key):
    v = cfg[key]
    if not (isinstance(v, (list, tuple)) and len(v) == 3):
        raise ConfigError(f"{key} must be a list of three numbers, got {v!r}")
    return tuple(float(x) for x in v)


def resolve_weights(cfg):
    has_gamma = "weights.gamma" in cfg
    has_theta = "weights.theta" in cfg
    if has_gamma == has_theta:
        raise ConfigError("give exactly one of weights.gamma or weights.theta")
    beta = _triple(cfg, "weights.beta") if "weights.beta" in cfg else (1.0, 1.0, 1.0)
    if has_gamma:
        return derive_angles(_triple(cfg, "weights.gamma"), beta=beta)
    return weights_from_angles(_triple(cfg, "weights.theta"), beta=beta)


def build_cluster(cfg):
    weights = resolve_weights(cfg)
    mesh = int(cfg.get("mesh", 200))
    if mesh < 8:
        raise ConfigError(f"mesh must be at least 8, got {mesh}")
    scenario = cfg["scenario"]
    if "scenario.areas" in cfg and scenario != "double_bubble":
        raise ConfigError("scenario.areas only applies to double_bubble")
    if scenario == "triod":
        return make_triod(weights, n=mesh)
    if scenario == "double_bubble":
        areas = cfg.get("scenario.areas", [1.0, 1.0])
        if not (isinstance(areas, (list, tuple)) and len(areas) == 2):
            raise ConfigError(f"scenario.areas must be two numbers, got {areas!r}")
        return make_double_bubble(weights, n=mesh, areas=tuple(float(a) for a in areas))
    if scenario == "prism":
        return make_prism(weights, n=mesh, rings=mesh)
    table = Path(str(scenario))
    if not table.is_file():
        raise ConfigError(
            f"scenario must be triod, double_bubble, prism, or a node-table "
            f"path; {scenario!r} is none of these")
    rows = np.loadtxt(table, delimiter=",", ndmin=2)
    return make_from_node_table(rows, weights)


def flow_config(cfg) -> FlowConfig:
    kwargs = {}
    for name in _FLOW_KEYS:
        key = f"flow.{name}"
        if key in cfg:
            v = cfg[key]
            kwargs[name] = int(v) if name in ("picard_max", "output_every",
                                              "max_retries") else float(v)
    return FlowConfig(**kwargs)


# ---------------------------------------------------------------------------
# output writers


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _trace_header(n_charts) -> list:
    cols = ["t", "energy"]
    cols += [f"area_{i + 1}" for i in range(n_charts)]
    cols += [f"len_{i + 1}" for i in range(n_charts)]
    cols += ["G2", "G3", "G_third", "sum_gbH", "picard_iters",
             "dissipation_defect"]
    return cols


def _trace_row(record, n_charts) -> list:
    vals = [record["t"], record["energy"]]
    vals += [record["areas"][i] for i in range(n_charts)]
    vals += [record["lengths"][i] for i in range(n_charts)]
    vals += [record["G2"], record["G3"], record["G_third"],
             record["sum_gbH"], record["picard_iters"],
             record["dissipation_defect"]]
    return vals


def write_trace(path, records, n_charts) -> None:
    lines = [",".join(_trace_header(n_charts))]
    for rec in records:
        lines.append(",".join(_fmt(v) for v in _trace_row(rec, n_charts)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_snapshot(path, cluster, state) -> None:
    pos = evaluate_phi(cluster, state)
    ndim = pos[0].shape[-1]
    cols = ["chart_id", "node", "x"] + ["px", "py", "pz"][:ndim] + ["rho"]
    lines = [",".join(cols)]
    for ci, chart in enumerate(cluster.charts):
        p = pos[ci].reshape(-1, ndim)
        r = state.rho[ci].reshape(-1)
        nx = chart.positions.shape[0]
        x = np.linspace(0.0, 1.0, nx) if not chart.closed else np.arange(nx) / nx
        x = np.broadcast_to(x.reshape(nx, *([1] * (state.rho[ci].ndim - 1))),
                            state.rho[ci].shape).reshape(-1)
        for k in range(p.shape[0]):
            vals = [str(ci), str(k), _fmt(x[k])]
            vals += [_fmt(c) for c in p[k]]
            vals.append(_fmt(r[k]))
            lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json(path, payload) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="utf-8", newline="\n")


def _status_payload(status) -> dict:
    detail = {}
    for k, v in status.detail.items():
        detail[k] = float(v) if isinstance(v, (float, np.floating)) else v
    return {"kind": status.kind, "detail": detail}


# ---------------------------------------------------------------------------
# subcommands


def _junction_curvature_residual(cluster) -> float:
    state = make_state(cluster)
    q = shape_quantities(cluster, state)
    gb = np.asarray(cluster.weights.gamma) * np.asarray(cluster.weights.beta)
    worst = 0.0
    for jn in cluster.junctions:
        tr = cluster.junction_trace(q.mean_curv, jn)
        worst = max(worst, float(np.max(np.abs(np.tensordot(gb, tr, axes=1)))))
    return worst


def cmd_validate(cfg, args) -> int:
    try:
        cluster = build_cluster(cfg)
    except JunctionFlowError as exc:
        report = {"ok": False,
                  "failures": [{"error": type(exc).__name__, "message": str(exc)}]}
        print(json.dumps(report, indent=2, sort_keys=True))
        return EXIT_VALIDATION
    geom = validate_cluster(cluster)
    compat = check_compatibility(cluster, make_state(cluster))
    # compatibility misses are warnings, not failures: runs may accept them
    report = {
        "ok": bool(geom["ok"]),
        "geometry": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                     for k, v in geom.items()},
        "compatibility": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                          for k, v in compat.items()},
        "junction_curvature_sum": _junction_curvature_residual(cluster),
        "warnings": [] if compat["ok"] else ["initial data violates the "
                                             "compatibility residual tolerance"],
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


def _run_dir(cfg, args) -> Path:
    if args.out:
        return Path(args.out)
    if "outputs.directory" in cfg:
        return Path(str(cfg["outputs.directory"]))
    raise ConfigError("no output directory: set outputs.directory or pass --out")


def cmd_simulate(cfg, args) -> int:
    cluster = build_cluster(cfg)
    fc = flow_config(cfg)
    state = make_state(cluster)
    compat = check_compatibility(cluster, state)
    if not compat["ok"] and not args.allow_warnings:
        print(json.dumps({"ok": False, "failures": [
            {"error": "CompatibilityWarning",
             "message": "initial data is not compatible; rerun with "
                        "--allow-warnings to proceed"}]}, indent=2))
        return EXIT_VALIDATION

    out = _run_dir(cfg, args)
    formats = cfg.get("outputs.formats", ["csv", "json"])
    if isinstance(formats, str):
        formats = [formats]
    for f in formats:
        if f not in ("csv", "json"):
            raise ConfigError(f"outputs.formats entries must be csv or json, got {f!r}")
    snap_every = int(cfg.get("outputs.snapshot_every", 1))
    if snap_every < 1:
        raise ConfigError("outputs.snapshot_every must be at least 1")
    out.mkdir(parents=True, exist_ok=True)
    snap_dir = out / "snapshots"
    write_csv = "csv" in formats
    if write_csv:
        snap_dir.mkdir(exist_ok=True)

    def observer(index, cl, st, record):
        if write_csv and index % snap_every == 0:
            write_snapshot(snap_dir / f"{index:06d}.csv", cl, st)

    result = run(cluster, state, fc, observer=observer)

    if write_csv:
        write_trace(out / "trace.csv", result.records, len(cluster.charts))
    if "json" in formats:
        meta = {
            "config": {k: cfg[k] for k in sorted(cfg)},
            "version": __version__,
            "dt": float(result.dt),
            "dt_rule": DT_RULE,
            "seed": int(args.seed),
            "reref_times": [float(t) for t in result.reref_times],
            "final_status": _status_payload(result.status),
            "records": len(result.records),
            "snapshot_every": snap_every,
            "trace_columns": _trace_header(len(cluster.charts)),
            "warnings": list(result.warnings),
            "energy_flags": [float(t) for t in result.energy_flags],
        }
        write_json(out / "meta.json", meta)

    kind = result.status.kind
    if kind == "Running":
        return EXIT_OK
    if kind in ("FoldOver", "PicardDiverged", "SingularSystem"):
        return EXIT_SOLVER
    return EXIT_STOPPED


def cmd_eigs(cfg, args) -> int:
    cluster = build_cluster(cfg)
    k = int(cfg.get("eigs.k", 6))
    if k < 1:
        raise ConfigError("eigs.k must be at least 1")
    system = solve_eigen(cluster, k=k)
    values = [float(v) for v in system.values]
    ok = all(np.isfinite(values)) and all(
        b >= a - 1e-12 for a, b in zip(values, values[1:]))
    report = {"ok": bool(ok), "k": k, "values": values,
              "extrapolated": bool(system.info.get("extrapolated", False)),
              "seed": int(args.seed)}
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "report.json", report)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_ls_check(cfg, args) -> int:
    weights = resolve_weights(cfg)
    samples = int(cfg.get("lscheck.samples", 10000))
    ode_samples = int(cfg.get("lscheck.ode_samples", 12))
    try:
        grid = check_grid(weights, samples=samples, seed=args.seed)
    except Violation as exc:
        print(json.dumps({"ok": False, "failures": [
            {"error": "Violation", "message": str(exc)}]}, indent=2))
        return EXIT_VALIDATION
    rng = np.random.default_rng(args.seed)
    floor = singular_floor(weights)
    sig, worst_defect = [], 0.0
    for _ in range(ode_samples):
        lam = rng.uniform(0.05, 10.0) + 1j * rng.uniform(-10.0, 10.0)
        rep = ode_energy_check(weights, lam, rng.uniform(-3.0, 3.0))
        sig.append(rep["sigma_min"])
        worst_defect = max(worst_defect, rep["energy_defect"])
    report = dict(grid)
    report["sigma_min_stats"] = {
        "count": ode_samples, "min": float(min(sig)), "max": float(max(sig)),
        "mean": float(np.mean(sig)), "singular_floor": float(floor),
        "max_energy_defect": float(worst_defect),
    }
    report["ok"] = bool(grid["min_neg_re"] > 0.0 and grid["min_abs_det"] > 0.0
                        and min(sig) > 10.0 * floor and worst_defect <= 1e-10)
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "report.json", report)
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


def cmd_lincheck(cfg, args) -> int:
    weights = resolve_weights(cfg)
    n = int(cfg.get("lincheck.n", 2400))
    report = linearization_sweep(weights=weights, n=n, seed=args.seed)
    checks = {}
    for key in ("velocity", "curvature", "angle_rows"):
        block = report[key]
        checks[key] = bool(1.9 <= block["slope"] <= 2.1
                           and block["min_rel_error"] <= 1e-5)
    report["ok"] = all(checks.values())
    report["checks"] = checks
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "report.json", report)
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# sweep fan-out


def _parse_override(token, source):
    if "=" not in token:
        raise ConfigError(f"{source}: overrides must be key=value, got {token!r}")
    key, _, value = token.partition("=")
    key = key.strip()
    if key not in KNOWN_KEYS:
        raise ConfigError(f"{source}: unknown key {key!r}")
    try:
        return key, ast.literal_eval(value.strip())
    except (ValueError, SyntaxError):
        return key, value.strip()


def _sweep_job(payload):
    cfg, out_dir, seed, allow = payload
    ns = argparse.Namespace(out=out_dir, seed=seed, allow_warnings=allow,
                            sweep=None)
    try:
        return cmd_simulate(cfg, ns)
    except JunctionFlowError as exc:
        print(json.dumps({"ok": False, "out": out_dir, "failures": [
            {"error": type(exc).__name__, "message": str(exc)}]}))
        return EXIT_VALIDATION


def run_sweep(cfg, args) -> int:
    jobs = []
    base = _run_dir(cfg, args)
    text = Path(args.sweep).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        job_cfg = dict(cfg)
        for token in line.split():
            key, value = _parse_override(token, f"{args.sweep}:{lineno}")
            job_cfg[key] = value
        job_cfg.pop("outputs.directory", None)
        out_dir = str(base / f"sweep_{len(jobs):04d}")
        jobs.append((job_cfg, out_dir, args.seed, args.allow_warnings))
    if not jobs:
        raise ConfigError(f"{args.sweep}: no runs defined")
    workers = os.environ.get("JUNCTIONFLOW_THREADS")
    workers = int(workers) if workers else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(jobs)))
    if workers == 1:
        codes = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_sweep_job, jobs))
    print(json.dumps({"runs": len(codes), "exit_codes": codes}))
    return max(codes)


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="junctionflow",
        description="curvature flow of triple-junction clusters")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "simulate", "eigs", "ls-check", "lincheck"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--allow-warnings", action="store_true")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--sweep", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if not 0 <= args.seed < 2 ** 64:
        print(json.dumps({"ok": False, "failures": [
            {"error": "ConfigError", "message": "seed must fit in 64 bits"}]}))
        return EXIT_VALIDATION
    handlers = {
        "validate": cmd_validate,
        "simulate": cmd_simulate,
        "eigs": cmd_eigs,
        "ls-check": cmd_ls_check,
        "lincheck": cmd_lincheck,
    }
    try:
        cfg = parse_config(args.config)
        if args.sweep is not None:
            if args.command != "simulate":
                raise ConfigError("--sweep only applies to simulate")
            return run_sweep(cfg, args)
        return handlers[args.command](cfg, args)
    except JunctionFlowError as exc:
        print(json.dumps({"ok": False, "failures": [
            {"error": type(exc).__name__, "message": str(exc)}]}, indent=2))
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
