"""Batch driver: solve / baseline / oracle / sweep / validate.

Reads a JSON config, runs the requested command and writes machine-readable
artifacts (results.json plus rates.csv, links.csv, placement.csv, or
sweep.csv for sweeps). Slot and node ids in CSV files are 1-based; JSON
arrays are positional (index = id - 1).

Exit codes: 0 success (solver warnings are recorded in results.json),
2 config/schema violation, 3 oracle enumeration budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import _kernels
from .channel import Placement, Scenario
from .config import (SCHEMA_VERSION, RunConfig, ValidationError, load_config,
                     validate_config)
from .optimizer import (ORACLE_MAX_SLOTS, ORACLE_MAX_UAVS, ORACLE_MAX_UGVS,
                        BudgetExceededError, SolveReport, alternate, brute_force_schedule,
                        evaluate_policy)
from .scenario import baseline_fixed_selection, baseline_random_selection
from .scheduler import Schedule

METHODS = ("proposed", "fixed_selection", "random_selection")


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _write_rates_csv(path: Path, schedule: Schedule, rates: np.ndarray) -> None:
    n, m, t = rates.shape
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "i", "j", "a_ij", "rate"])
        for s in range(t):
            for i in range(n):
                for j in range(m):
                    writer.writerow([s + 1, i + 1, j + 1,
                                     repr(float(schedule.a[i, j, s])),
                                     repr(float(rates[i, j, s]))])


def _write_links_csv(path: Path, schedule: Schedule, placement: Placement,
                     scenario: Scenario) -> None:
    """Per-slot edges: one 'communication' row per active link, and one
    'interference' row per (other transmitting UGV, receiving UAV) pair."""
    a = schedule.a
    n, m, t = a.shape
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "kind", "ugv", "uav", "ugv_x", "ugv_y", "uav_x", "uav_y"])
        for s in range(t):
            active = [(i, j) for i in range(n) for j in range(m) if a[i, j, s] > 0]
            transmitters = {i for i, _ in active}
            for i, j in active:
                writer.writerow([s + 1, "communication", i + 1, j + 1,
                                 scenario.trajectories[i, s, 0],
                                 scenario.trajectories[i, s, 1],
                                 placement.xy[j, 0], placement.xy[j, 1]])
            for i, j in active:
                for p in sorted(transmitters - {i}):
                    writer.writerow([s + 1, "interference", p + 1, j + 1,
                                     scenario.trajectories[p, s, 0],
                                     scenario.trajectories[p, s, 1],
                                     placement.xy[j, 0], placement.xy[j, 1]])


def _write_placement_csv(path: Path, placement: Placement, scenario: Scenario) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["uav", "x", "y", "height"])
        for j in range(scenario.m):
            writer.writerow([j + 1, placement.xy[j, 0], placement.xy[j, 1],
                             scenario.heights[j]])


def _write_artifacts(out: Path, payload: dict, schedule: Schedule,
                     placement: Placement, scenario: Scenario,
                     rates: np.ndarray) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "results.json", payload)
    _write_rates_csv(out / "rates.csv", schedule, rates)
    _write_links_csv(out / "links.csv", schedule, placement, scenario)
    _write_placement_csv(out / "placement.csv", placement, scenario)


def _base_payload(command: str, cfg: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "backend": _kernels.BACKEND,
        "seed": cfg.seed,
        "warnings": [],
    }


def _report_payload(report: SolveReport) -> dict:
    return {
        "objective": report.objective,
        "objective_trace": list(report.objective_trace),
        "converged": report.converged,
        "rounds": report.rounds,
        "final_placement": report.final_placement.xy.tolist(),
        "final_schedule": report.final_schedule.a.tolist(),
        "per_link_rates": report.per_link_rates.tolist(),
        "per_slot_totals": report.per_link_rates.sum(axis=(0, 1)).tolist(),
        "dc_traces": [{
            "converged": dc.converged,
            "eta_initial": dc.eta_initial,
            "eta_final": dc.eta_final,
            "residual": dc.residual,
            "iterations": [{
                "index": it.index, "eta": it.eta, "objective": it.objective,
                "surrogate": it.surrogate, "residual": it.residual,
                "inner_gap": it.inner_gap, "inner_iterations": it.inner_iterations,
                "inner_converged": it.inner_converged, "moved": it.moved,
            } for it in dc.trace],
        } for dc in report.dc_traces],
        "gd_traces": [{
            "converged": gd.converged,
            "reason": gd.reason,
            "iterations": gd.iterations,
            "objective_trace": list(gd.trace),
        } for gd in report.gd_traces],
        "warnings": list(report.warnings),
        "config_echo": report.config_echo,
    }


def _cmd_solve(cfg: RunConfig, out: Path) -> int:
    scenario = cfg.scenario()
    report = alternate(scenario, cfg.channel, cfg.solver_for_seed(cfg.seed))
    payload = _base_payload("solve", cfg)
    payload.update(_report_payload(report))
    payload["wall_time"] = report.wall_time
    _write_artifacts(out, payload, report.final_schedule, report.final_placement,
                     scenario, report.per_link_rates)
    print(f"solve: objective {report.objective:.6f} in {report.rounds} rounds "
          f"-> {out}")
    return 0


def _selected_pair(schedule: Schedule) -> list[int]:
    first_slot = schedule.a[:, :, 0]
    return [int(np.argmax(first_slot[:, j])) + 1
            for j in range(first_slot.shape[1]) if first_slot[:, j].any()]


def _cmd_baseline(cfg: RunConfig, out: Path, which: str) -> int:
    scenario = cfg.scenario()
    started = time.perf_counter()
    solver = cfg.solver_for_seed(cfg.seed)
    if which == "fixed":
        schedule, placement = baseline_fixed_selection(scenario, cfg.channel, solver)
    else:
        schedule, placement = baseline_random_selection(scenario, cfg.channel, solver,
                                                        seed=cfg.seed)
    result = evaluate_policy(schedule, placement, scenario, cfg.channel)
    payload = _base_payload(f"baseline-{which}", cfg)
    payload.update({
        "objective": result.total,
        "per_slot_totals": result.per_slot.tolist(),
        "per_link_rates": result.rates.tolist(),
        "final_schedule": schedule.a.tolist(),
        "final_placement": placement.xy.tolist(),
        "selected_ugvs": _selected_pair(schedule),
        "config_echo": cfg.raw,
        "wall_time": time.perf_counter() - started,
    })
    _write_artifacts(out, payload, schedule, placement, scenario, result.rates)
    print(f"baseline-{which}: objective {result.total:.6f} -> {out}")
    return 0


def _check_oracle_budget(cfg: RunConfig) -> list[str]:
    problems = []
    if cfg.spec.n_ugvs > ORACLE_MAX_UGVS:
        problems.append(f"n_ugvs {cfg.spec.n_ugvs} > {ORACLE_MAX_UGVS}")
    if cfg.n_uavs > ORACLE_MAX_UAVS:
        problems.append(f"n_uavs {cfg.n_uavs} > {ORACLE_MAX_UAVS}")
    if cfg.spec.t_slots > ORACLE_MAX_SLOTS:
        problems.append(f"t_slots {cfg.spec.t_slots} > {ORACLE_MAX_SLOTS}")
    return problems


def _cmd_oracle(cfg: RunConfig, out: Path) -> int:
    over = _check_oracle_budget(cfg)
    if over:
        print("oracle: enumeration budget exceeded: " + "; ".join(over),
              file=sys.stderr)
        return 3
    scenario = cfg.scenario()
    report = alternate(scenario, cfg.channel, cfg.solver_for_seed(cfg.seed))
    oracle_schedule, oracle_value = brute_force_schedule(
        report.final_placement, scenario, cfg.channel)
    payload = _base_payload("oracle", cfg)
    payload.update(_report_payload(report))
    payload.update({
        "solver_objective": report.objective,
        "oracle_objective": oracle_value,
        "optimality_ratio": report.objective / oracle_value if oracle_value > 0 else 1.0,
        "oracle_schedule": oracle_schedule.a.tolist(),
    })
    payload["wall_time"] = report.wall_time
    _write_artifacts(out, payload, report.final_schedule, report.final_placement,
                     scenario, report.per_link_rates)
    print(f"oracle: solver {report.objective:.6f} vs optimum {oracle_value:.6f} "
          f"(ratio {payload['optimality_ratio']:.4f}) -> {out}")
    return 0


def _sweep_point(args: tuple[RunConfig, int, int]) -> list[dict]:
    cfg, n, seed = args
    scenario = cfg.scenario(n_ugvs=n)
    solver = cfg.solver_for_seed(seed)
    rows = []

    started = time.perf_counter()
    report = alternate(scenario, cfg.channel, solver)
    rows.append({"n_ugvs": n, "method": "proposed", "sum_rate": report.objective,
                 "wall_time": time.perf_counter() - started, "seed": seed})

    started = time.perf_counter()
    schedule, placement = baseline_fixed_selection(scenario, cfg.channel, solver)
    value = evaluate_policy(schedule, placement, scenario, cfg.channel).total
    rows.append({"n_ugvs": n, "method": "fixed_selection", "sum_rate": value,
                 "wall_time": time.perf_counter() - started, "seed": seed})

    started = time.perf_counter()
    schedule, placement = baseline_random_selection(scenario, cfg.channel, solver,
                                                    seed=seed)
    value = evaluate_policy(schedule, placement, scenario, cfg.channel).total
    rows.append({"n_ugvs": n, "method": "random_selection", "sum_rate": value,
                 "wall_time": time.perf_counter() - started, "seed": seed})
    return rows


def _cmd_sweep(cfg: RunConfig, out: Path, jobs: int) -> int:
    points = [(cfg, n, cfg.seed + k)
              for n in cfg.sweep_ugv_counts for k in range(cfg.sweep_seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_ugvs", "method", "sum_rate", "wall_time", "seed"])
        for rows in results:
            for row in rows:
                writer.writerow([row["n_ugvs"], row["method"],
                                 repr(float(row["sum_rate"])),
                                 row["wall_time"], row["seed"]])
    print(f"sweep: {len(points)} points x {len(METHODS)} methods -> {out / 'sweep.csv'}")
    return 0


def _cmd_validate(config_path: str) -> int:
    try:
        with open(config_path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        print(f"config not found: {config_path}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"config: invalid JSON ({exc})")
        return 1
    problems = validate_config(cfg)
    if problems:
        for problem in problems:
            print(problem)
        return 1
    print("valid")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airsched",
        description="Relay placement and link scheduling optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="seed (overrides config)")

    common(sub.add_parser("solve", help="run the alternating optimizer"))
    baseline = sub.add_parser("baseline", help="run a pre-selection baseline")
    baseline.add_argument("which", choices=("fixed", "random"))
    common(baseline)
    common(sub.add_parser("oracle", help="solve, then compare against exact enumeration"))
    sweep = sub.add_parser("sweep", help="compare methods across UGV counts")
    common(sweep)
    sweep.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    validate = sub.add_parser("validate", help="check a config without running")
    validate.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return _cmd_validate(args.config)
    try:
        cfg = load_config(args.config, command=args.command,
                          seed=args.seed, output_dir=args.out)
    except FileNotFoundError:
        print(f"config not found: {args.config}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        for problem in exc.problems:
            print(problem, file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    try:
        if args.command == "solve":
            return _cmd_solve(cfg, out)
        if args.command == "baseline":
            return _cmd_baseline(cfg, out, args.which)
        if args.command == "oracle":
            return _cmd_oracle(cfg, out)
        if args.command == "sweep":
            return _cmd_sweep(cfg, out, args.jobs)
    except BudgetExceededError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
