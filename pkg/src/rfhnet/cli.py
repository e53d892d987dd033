"""Command-line front end: single-point evaluation, parameter sweeps with
CSV emission, and the distance-profile coefficient fit.

Subcommands: analytic, simulate, sweep, fit.  All take --config; targeted
overrides (--lambda-b, --lambda-u, --e-th, --seed) beat file values.  Sweep
CSVs open with a `# cfg key=value` preamble capturing the fully resolved
configuration, then a fixed header row; per-row wall times land in trailing
`# wall` comment lines so re-running an identical config yields a
byte-identical CSV body.  Exit codes: 0 success, 1 any point failed,
2 configuration error.  RFH_THREADS caps sweep-point parallelism.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import analytic
from .config import (ConfigError, SweepSpec, load_config, resolved_lines)
from .core import (NetworkParams, NumericPolicy, per_km2_to_per_m2,
                   per_m2_to_per_km2)
from .mcsim import SimConfig, estimate

_DEFAULT_POINT_METRICS = ("p_tr", "t_avg", "t_total", "mean_users")
_REFERENCE_COEFFS = analytic.UNIT_CELL_COEFFS


@dataclass
class SweepRecord:
    value: float                 # swept value in config units
    metric: str
    mode: str                    # analytic | simulate
    result: Optional[float]      # None on error
    stderr: Optional[float]      # None for analytic rows
    error: str = ""
    wall_time_ms: float = 0.0


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.17e}"


def _apply_value(params: NetworkParams, parameter: str,
                 value: float) -> NetworkParams:
    if parameter == "lambda_b":
        return dataclasses.replace(params,
                                   lambda_b=per_km2_to_per_m2(value))
    if parameter == "lambda_u":
        return dataclasses.replace(params,
                                   lambda_u=per_km2_to_per_m2(value))
    if parameter == "e_th":
        return dataclasses.replace(params, e_th=value)
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def _analytic_metrics(params: NetworkParams, policy: NumericPolicy,
                      metrics: Tuple[str, ...]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    if "p_tr" in metrics or "mean_users" in metrics:
        br = analytic.delivery_prob(params, policy)
        out["p_tr"] = br.p_tr
        out["mean_users"] = br.expected_users_typical_cell
    if "t_total" in metrics:
        rep = analytic.total_throughput(params, policy)
        out["t_total"] = rep.t_total
        out["t_avg"] = rep.t_avg
    elif "t_avg" in metrics:
        out["t_avg"] = analytic.avg_cell_throughput(params, policy)
    if "sustainable_ratio" in metrics:
        out["sustainable_ratio"] = analytic.sustainable_ratio(
            params.lambda_b, params, policy)
    return {m: out[m] for m in metrics if m in out}


def _point_seed(base_seed: int, index: int) -> int:
    # stable per-point stream regardless of execution order
    return int(np.random.SeedSequence((base_seed, index)).generate_state(1)[0])


def _run_point(task) -> List[SweepRecord]:
    (index, value, parameter, params, policy, sim_cfg, metrics, mode) = task
    records: List[SweepRecord] = []
    try:
        point_params = _apply_value(params, parameter, value)
    except Exception as exc:      # bad swept value: every row errors
        for m in metrics:
            for md in _modes_for(m, mode):
                records.append(SweepRecord(value, m, md, None, None,
                                           f"{type(exc).__name__}: {exc}"))
        return records

    analytic_wanted = tuple(m for m in metrics
                            if "analytic" in _modes_for(m, mode))
    if analytic_wanted:
        t0 = time.perf_counter()
        for m in analytic_wanted:
            try:
                vals = _analytic_metrics(point_params, policy, (m,))
                records.append(SweepRecord(
                    value, m, "analytic", vals[m], None, "",
                    (time.perf_counter() - t0) * 1e3))
            except Exception as exc:
                records.append(SweepRecord(
                    value, m, "analytic", None, None,
                    f"{type(exc).__name__}: {exc}",
                    (time.perf_counter() - t0) * 1e3))
            t0 = time.perf_counter()

    sim_wanted = tuple(m for m in metrics if "simulate" in _modes_for(m, mode))
    if sim_wanted:
        cfg = dataclasses.replace(sim_cfg,
                                  seed=_point_seed(sim_cfg.seed, index))
        t0 = time.perf_counter()
        try:
            outcome = estimate(point_params, cfg)
            picked = {
                "p_tr": (outcome.p_tr_hat, outcome.p_tr_stderr),
                "t_avg": (outcome.t_avg_hat, outcome.t_avg_stderr),
                "t_total": (outcome.t_total_hat, outcome.t_total_stderr),
                "mean_users": (outcome.mean_users_per_nonempty_cell,
                               outcome.mean_users_stderr),
            }
            ms = (time.perf_counter() - t0) * 1e3
            for m in sim_wanted:
                mean, err = picked[m]
                records.append(SweepRecord(value, m, "simulate", mean, err,
                                           "", ms / len(sim_wanted)))
        except Exception as exc:
            ms = (time.perf_counter() - t0) * 1e3
            for m in sim_wanted:
                records.append(SweepRecord(
                    value, m, "simulate", None, None,
                    f"{type(exc).__name__}: {exc}", ms / len(sim_wanted)))
    return records


def _modes_for(metric: str, mode: str) -> Tuple[str, ...]:
    if metric == "sustainable_ratio":
        return ("analytic",)
    if mode == "both":
        return ("analytic", "simulate")
    return (mode,)


def _worker_count(n_points: int) -> int:
    raw = os.environ.get("RFH_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, min(n, n_points)) if raw else 1


def run_sweep(params: NetworkParams, policy: NumericPolicy,
              sim_cfg: SimConfig, sweep: SweepSpec) -> List[SweepRecord]:
    """Evaluate every (value, metric, mode) cell; failures become error
    rows rather than aborting the sweep.  Output order is (value, metric,
    mode) regardless of execution order or parallelism."""
    tasks = [(i, v, sweep.parameter, params, policy, sim_cfg,
              sweep.metrics, sweep.mode) for i, v in enumerate(sweep.values)]
    workers = _worker_count(len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_point, tasks))
    else:
        chunks = [_run_point(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.value, r.metric, r.mode))
    return records


def write_sweep_csv(fh, records: List[SweepRecord], cfg_lines: List[str]):
    fh.write("# rfhnet sweep\n")
    for line in cfg_lines:
        fh.write(f"# cfg {line}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["value", "metric", "mode", "result", "stderr", "error"])
    for r in records:
        writer.writerow([_fmt(r.value), r.metric, r.mode, _fmt(r.result),
                         _fmt(r.stderr), r.error])
    for i, r in enumerate(records):
        fh.write(f"# wall {i} {r.wall_time_ms:.3f}\n")


def read_sweep_csv(path: str):
    """Recover (cfg dict, records) from an emitted sweep CSV."""
    cfg: Dict[str, str] = {}
    walls: Dict[int, float] = {}
    body: List[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# cfg "):
                key, _, val = line[len("# cfg "):].partition("=")
                cfg[key] = val
            elif line.startswith("# wall "):
                _, idx, ms = line[2:].split()
                walls[int(idx)] = float(ms)
            elif line.startswith("#") or not line:
                continue
            else:
                body.append(line)
    records: List[SweepRecord] = []
    rows = list(csv.reader(body))
    if not rows or rows[0] != ["value", "metric", "mode", "result", "stderr",
                               "error"]:
        raise ValueError(f"{path}: not a sweep CSV (bad header)")
    for i, row in enumerate(rows[1:]):
        value, metric, mode, result, stderr, error = row
        records.append(SweepRecord(
            float(value), metric, mode,
            float(result) if result else None,
            float(stderr) if stderr else None,
            error, walls.get(i, 0.0)))
    return cfg, records


def _overrides_from(args) -> Dict[str, str]:
    out = {}
    if args.lambda_b is not None:
        out["network.lambda_b_per_km2"] = repr(args.lambda_b)
    if args.lambda_u is not None:
        out["network.lambda_u_per_km2"] = repr(args.lambda_u)
    if args.e_th is not None:
        out["network.e_th"] = repr(args.e_th)
    if getattr(args, "seed", None) is not None:
        out["sim.seed"] = str(args.seed)
    return out


def cmd_analytic(args) -> int:
    params, policy, _, _ = load_config(args.config, _overrides_from(args))
    metrics = tuple(args.metrics.split(",")) if args.metrics \
        else _DEFAULT_POINT_METRICS
    vals = _analytic_metrics(params, policy, metrics)
    for m in metrics:
        if m not in vals:
            print(f"error: unknown metric {m!r}", file=sys.stderr)
            return 2
        print(f"{m}={vals[m]:.17e}")
    return 0


def cmd_simulate(args) -> int:
    params, _, sim_cfg, _ = load_config(args.config, _overrides_from(args))
    outcome = estimate(params, sim_cfg)
    print(f"p_tr={outcome.p_tr_hat:.17e}")
    print(f"p_tr_stderr={outcome.p_tr_stderr:.17e}")
    print(f"t_avg={outcome.t_avg_hat:.17e}")
    print(f"t_avg_stderr={outcome.t_avg_stderr:.17e}")
    print(f"t_total={outcome.t_total_hat:.17e}")
    print(f"t_total_stderr={outcome.t_total_stderr:.17e}")
    print(f"mean_users={outcome.mean_users_per_nonempty_cell:.17e}")
    print(f"mean_users_stderr={outcome.mean_users_stderr:.17e}")
    print(f"n_events={outcome.n_events}")
    print(f"n_replications={outcome.n_replications}")
    return 0


def cmd_sweep(args) -> int:
    params, policy, sim_cfg, sweep = load_config(args.config,
                                                 _overrides_from(args))
    if sweep is None:
        raise ConfigError("sweep section required for the sweep command",
                          args.config)
    records = run_sweep(params, policy, sim_cfg, sweep)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        write_sweep_csv(fh, records,
                        resolved_lines(params, policy, sim_cfg, sweep))
    failures = [r for r in records if r.error]
    for r in failures:
        print(f"error at {sweep.parameter}={r.value} {r.metric}/{r.mode}: "
              f"{r.error}", file=sys.stderr)
    print(f"wrote {len(records)} rows to {args.output}"
          + (f" ({len(failures)} failed)" if failures else ""))
    return 1 if failures else 0


def cmd_fit(args) -> int:
    if args.config:
        _, policy, _, _ = load_config(args.config, {})
    else:
        policy = NumericPolicy()
    fit = analytic.fit_conditional_distance_pdf(policy)
    c1, c2, c3, c4 = fit.coefficients
    grid = analytic._FIT_R_GRID
    target = analytic._unit_distance_pdf(grid)
    fitted = analytic.reconstructed_distance_pdf(grid, fit.coefficients)
    gap = float(np.max(np.abs(fitted - target)))
    peak = float(np.max(target))
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write("# rfhnet fit\n")
        fh.write(f"# coeff c1={c1:.17e} c2={c2:.17e} c3={c3:.17e} "
                 f"c4={c4:.17e}\n")
        fh.write(f"# reference c1={_REFERENCE_COEFFS[0]!r} "
                 f"c2={_REFERENCE_COEFFS[1]!r} c3={_REFERENCE_COEFFS[2]!r} "
                 f"c4={_REFERENCE_COEFFS[3]!r}\n")
        fh.write(f"# residual {fit.residual:.17e}\n")
        fh.write(f"# max_gap {gap:.17e} peak {peak:.17e}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r_norm", "target_pdf", "fitted_pdf"])
        for r, tv, fv in zip(grid, target, fitted):
            writer.writerow([f"{r:.17e}", f"{tv:.17e}", f"{fv:.17e}"])
    print(f"coefficients: c1={c1:.6g} c2={c2:.6g} c3={c3:.6g} c4={c4:.6g}")
    print(f"max pointwise gap {gap:.4e} ({gap / peak:.2%} of peak); "
          f"wrote {args.output}")
    if gap > args.max_gap * peak:
        print(f"error: gap exceeds --max-gap {args.max_gap:.3g} of peak",
              file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfhnet",
        description="Harvest-then-receive cellular network experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--lambda-b", type=float, default=None,
                       help="override station density [per km2]")
        p.add_argument("--lambda-u", type=float, default=None,
                       help="override user density [per km2]")
        p.add_argument("--e-th", type=float, default=None,
                       help="override activation energy [J]")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override simulator seed")

    p = sub.add_parser("analytic", help="closed-form metrics at one point")
    common(p, seed=False)
    p.add_argument("--metrics", default="",
                   help="comma list (default p_tr,t_avg,t_total,mean_users)")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="slot-level simulation at one point")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the configured sweep, emit CSV")
    common(p)
    p.add_argument("--output", required=True, help="CSV output path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit the unit-cell distance profile")
    p.add_argument("--config", default="", help="config file (policy only)")
    p.add_argument("--output", required=True, help="CSV output path")
    p.add_argument("--max-gap", type=float, default=0.05,
                   help="fail if max error exceeds this fraction of peak")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
