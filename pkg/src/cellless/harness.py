"""Experiment orchestration: seeded runs, paired solver comparisons,
aggregation across seeds, and tidy plot-data emission."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .radio_metrics import Evaluator, MetricsBundle
from .scenario import (Scenario, builtin_template, BUILTIN_TEMPLATES,
                       generate_placements, load_scenario)
from .solution import SolutionState, save_solution
from .solver_ctm import CtmConfig, NoFeasibleSolutionError, solve_ctm
from .solver_maxrate import AnnealConfig, solve_maxrate

SOLVERS = ("ctm", "maxrate")
PLOT_KINDS = ("power-bars", "rate-cdf", "sar-cdf", "rate-map", "sar-map")


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str                      # built-in name or file path
    solver: str = "both"               # ctm | maxrate | both
    seeds: tuple = (0,)
    n_realizations: int = 10
    out_dir: str | None = None
    ctm: CtmConfig = CtmConfig()
    anneal: AnnealConfig = AnnealConfig()
    workers: int = 1
    dump_links: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.solver not in SOLVERS + ("both",):
            raise ValueError(f"unknown solver {self.solver!r}")

    @property
    def solver_list(self):
        return list(SOLVERS) if self.solver == "both" else [self.solver]


@dataclass
class RunRecord:
    seed: int
    solver: str
    scenario_name: str
    wall_time: float
    bundle: MetricsBundle | None
    solution: SolutionState | None
    error: str | None = None


def _instantiate(spec: ExperimentSpec, seed: int) -> Scenario:
    """Scenario instance for one seed: built-ins are re-placed per seed,
    files are fixed worlds shared by all seeds."""
    if spec.scenario in BUILTIN_TEMPLATES:
        return generate_placements(builtin_template(spec.scenario), seed)
    return load_scenario(spec.scenario)


def _run_one(spec: ExperimentSpec, seed: int, solver: str) -> RunRecord:
    scenario = _instantiate(spec, seed)
    ctm_cfg = replace(spec.ctm, seed=seed,
                      realizations_per_check=spec.n_realizations)
    try:
        t0 = time.perf_counter()
        if solver == "ctm":
            solution, bundle = solve_ctm(scenario, ctm_cfg)
        else:
            sa_cfg = replace(spec.anneal, seed=seed,
                             realizations_per_check=spec.n_realizations)
            solution, bundle = solve_maxrate(scenario, sa_cfg)
        wall = time.perf_counter() - t0
    except NoFeasibleSolutionError as e:
        return RunRecord(seed, solver, scenario.name, 0.0, None, None, error=str(e))
    record = RunRecord(seed, solver, scenario.name, wall, bundle, solution)
    if spec.out_dir:
        _write_run(spec, scenario, record)
    return record


def _run_dir(spec: ExperimentSpec, record: RunRecord) -> Path:
    return Path(spec.out_dir) / record.scenario_name / str(record.seed) / record.solver


def _write_run(spec: ExperimentSpec, scenario: Scenario, record: RunRecord):
    out = _run_dir(spec, record)
    out.mkdir(parents=True, exist_ok=True)
    save_solution(record.solution, out / "solution.json")
    _write_metrics_csv(scenario, record.bundle, out / "metrics.csv")
    summary = {
        "seed": record.seed,
        "solver": record.solver,
        "scenario": record.scenario_name,
        "wall_time_s": record.wall_time,
        "total_power_w": record.bundle.total_power,
        "per_poa_power_dbm": {
            pid: (None if dbm == -math.inf else dbm)
            for pid, dbm in sorted(record.bundle.per_poa_power.items())
        },
        "feasible": record.bundle.feasible,
        "violated": list(record.bundle.violated),
        "min_rate_bps": record.bundle.min_rate,
        "max_sar_wkg": record.bundle.max_sar,
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    if spec.dump_links:
        ev = Evaluator(scenario, record.seed, spec.n_realizations)
        with open(out / "links.json", "w") as f:
            json.dump(ev.dump_links(record.solution), f)
            f.write("\n")


def _write_metrics_csv(scenario: Scenario, bundle: MetricsBundle, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["kind", "id", "x_m", "y_m", "rate_bps", "phantom", "sar_wkg"])
        for u in scenario.users:
            w.writerow(["user", u.id, repr(u.position.x), repr(u.position.y),
                        repr(bundle.per_user_rate[u.id]), "", ""])
        for h in scenario.humans:
            w.writerow(["human", h.id, repr(h.position.x), repr(h.position.y),
                        "", h.phantom_id, repr(bundle.per_human_sar[h.id])])


def run_experiment(spec: ExperimentSpec) -> list:
    """One record per (seed, solver); order and content are independent of
    the worker count. Solver failures are recorded, not raised."""
    tasks = [(seed, solver) for seed in spec.seeds for solver in spec.solver_list]
    if spec.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(_run_one, spec, seed, solver)
                       for seed, solver in tasks]
            records = [f.result() for f in futures]
    else:
        records = [_run_one(spec, seed, solver) for seed, solver in tasks]
    records.sort(key=lambda r: (r.seed, r.solver))
    if spec.out_dir:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_aggregate(records, out / "aggregate.csv")
    return records


def write_aggregate(records, path):
    """Cross-seed aggregate per solver: median and 10/90th percentiles of
    total power, minimum user rate, and maximum SAR."""
    rows = []
    for solver in sorted({r.solver for r in records}):
        ok = [r for r in records if r.solver == solver and r.bundle is not None]
        if not ok:
            rows.append([solver, 0] + [""] * 9)
            continue
        power = np.array([r.bundle.total_power for r in ok])
        min_rate = np.array([r.bundle.min_rate for r in ok])
        max_sar = np.array([r.bundle.max_sar for r in ok])
        stats = []
        for arr in (power, min_rate, max_sar):
            stats += [repr(float(np.median(arr))),
                      repr(float(np.percentile(arr, 10))),
                      repr(float(np.percentile(arr, 90)))]
        rows.append([solver, len(ok)] + stats)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["solver", "n_runs",
                    "total_power_w_median", "total_power_w_p10", "total_power_w_p90",
                    "min_rate_bps_median", "min_rate_bps_p10", "min_rate_bps_p90",
                    "max_sar_wkg_median", "max_sar_wkg_p10", "max_sar_wkg_p90"])
        w.writerows(rows)


def load_run_metrics(run_dir):
    """Re-parse one run directory into (summary dict, metrics rows)."""
    run_dir = Path(run_dir)
    with open(run_dir / "summary.json") as f:
        summary = json.load(f)
    with open(run_dir / "metrics.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    return summary, rows


def emit_plot_data(records, kind: str, path):
    """Tidy tabular text files feeding external plotting."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    ok = [r for r in records if r.bundle is not None]
    if not ok:
        raise ValueError("no successful records to plot")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        if kind == "power-bars":
            w.writerow(["solver", "seed", "poa_id", "power_w"])
            for r in ok:
                for pid, dbm in sorted(r.bundle.per_poa_power.items()):
                    watts = 0.0 if dbm == -math.inf else 10.0 ** ((dbm - 30.0) / 10.0)
                    w.writerow([r.solver, r.seed, pid, repr(watts)])
                w.writerow([r.solver, r.seed, "total", repr(r.bundle.total_power)])
        elif kind in ("rate-cdf", "sar-cdf"):
            col = "rate_bps" if kind == "rate-cdf" else "sar_wkg"
            w.writerow(["solver", col, "cdf"])
            for solver in sorted({r.solver for r in ok}):
                values = []
                for r in ok:
                    if r.solver != solver:
                        continue
                    src = (r.bundle.per_user_rate if kind == "rate-cdf"
                           else r.bundle.per_human_sar)
                    values.extend(src.values())
                values.sort()
                n = len(values)
                for i, v in enumerate(values, start=1):
                    w.writerow([solver, repr(v), repr(i / n)])
        elif kind == "rate-map":
            w.writerow(["solver", "seed", "user_id", "x_m", "y_m", "rate_bps"])
            for r in ok:
                scenario = _scenario_of(r)
                for u in scenario.users:
                    w.writerow([r.solver, r.seed, u.id, repr(u.position.x),
                                repr(u.position.y), repr(r.bundle.per_user_rate[u.id])])
        elif kind == "sar-map":
            w.writerow(["solver", "seed", "human_id", "x_m", "y_m", "phantom", "sar_wkg"])
            for r in ok:
                scenario = _scenario_of(r)
                for h in scenario.humans:
                    w.writerow([r.solver, r.seed, h.id, repr(h.position.x),
                                repr(h.position.y), h.phantom_id,
                                repr(r.bundle.per_human_sar[h.id])])


def _scenario_of(record: RunRecord) -> Scenario:
    if record.scenario_name in BUILTIN_TEMPLATES:
        return generate_placements(builtin_template(record.scenario_name), record.seed)
    return load_scenario(record.scenario_name)


def plot_data_from_dir(in_dir, kind: str, path):
    """Rebuild plot data from the per-run files under an output directory."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    in_dir = Path(in_dir)
    run_dirs = sorted(p.parent for p in in_dir.glob("*/*/*/summary.json"))
    if not run_dirs:
        raise ValueError(f"no run directories found under {in_dir}")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        if kind == "power-bars":
            w.writerow(["solver", "seed", "poa_id", "power_w"])
            for rd in run_dirs:
                summary, _ = load_run_metrics(rd)
                for pid, dbm in sorted(summary["per_poa_power_dbm"].items()):
                    watts = 0.0 if dbm is None else 10.0 ** ((dbm - 30.0) / 10.0)
                    w.writerow([summary["solver"], summary["seed"], pid, repr(watts)])
                w.writerow([summary["solver"], summary["seed"], "total",
                            repr(summary["total_power_w"])])
        elif kind in ("rate-cdf", "sar-cdf"):
            want = "user" if kind == "rate-cdf" else "human"
            col = "rate_bps" if kind == "rate-cdf" else "sar_wkg"
            w.writerow(["solver", col, "cdf"])
            per_solver = {}
            for rd in run_dirs:
                summary, rows = load_run_metrics(rd)
                vals = [float(row[col]) for row in rows if row["kind"] == want]
                per_solver.setdefault(summary["solver"], []).extend(vals)
            for solver in sorted(per_solver):
                values = sorted(per_solver[solver])
                n = len(values)
                for i, v in enumerate(values, start=1):
                    w.writerow([solver, repr(v), repr(i / n)])
        else:
            want = "user" if kind == "rate-map" else "human"
            if kind == "rate-map":
                w.writerow(["solver", "seed", "user_id", "x_m", "y_m", "rate_bps"])
            else:
                w.writerow(["solver", "seed", "human_id", "x_m", "y_m", "phantom",
                            "sar_wkg"])
            for rd in run_dirs:
                summary, rows = load_run_metrics(rd)
                for row in rows:
                    if row["kind"] != want:
                        continue
                    if kind == "rate-map":
                        w.writerow([summary["solver"], summary["seed"], row["id"],
                                    row["x_m"], row["y_m"], row["rate_bps"]])
                    else:
                        w.writerow([summary["solver"], summary["seed"], row["id"],
                                    row["x_m"], row["y_m"], row["phantom"],
                                    row["sar_wkg"]])
