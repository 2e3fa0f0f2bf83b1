# main.py
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

import config
from cba import cba_coefficients, check_kind
from database import CheckpointStore
from decomposition import (conditional_qfi, conditional_state, decomposition_identity, h_number_distribution,
                           husimi, husimi_axes, to_gh_basis)
from dynamics import PropagatorConfig, RampSchedule, conversion_efficiency, evolve_ramp, retained_fraction, retention_target
from errors import NumericalFailure, SpinorInputError, WorkerError
from estimation import default_theta_grid, peak_fisher, sigma_max
from fockspace import mean_zero_population, state_twin_fock, validate_system_size
from hamiltonian import build_hamiltonian, ground_state, spectral_gap
from metrology import covariance_matrix, qfi_optimal
from parametric import bogoliubov_window, compare_with_exact, resonance_q
from reporter import Reporter, format_value, load_manifest
from run_stats import SweepStats
from utils import setup_logging
from verification import run_checks

logger = logging.getLogger("SpinorMetrology")

GROUNDSCAN_COLUMNS = [
    "q", "fq_n_lambda_plus", "fq_n_lambda_minus", "fq_n_lambda_0", "fq_n_lambda_1", "fq_n_g45",
    "above_sql", "dominant_pair", "n0_over_n", "gap",
]
RAMP_COLUMNS = ["t", "q", "fq_sx_over_n", "fq_jx_over_n", "fidelity", "conversion_efficiency"]
RAMP_SUMMARY_COLUMNS = ["N", "Q", "q_end", "t_end", "target", "direction", "retained", "final_fidelity",
                        "final_conversion"]
NOISE_COLUMNS = ["sigma", "sigma_over_sqrt_n", "theta_peak", "fisher_peak", "fisher_peak_over_n", "above_sql"]
NOISE_SUMMARY_COLUMNS = ["N", "kind", "sigma_max", "sigma_max_over_sqrt_n", "peak_slope"]
QUENCH_COLUMNS = ["t", "mean_side_population", "analytic_mean_pairs", "fq_exact_over_n", "fq_analytic_over_n",
                  "relative_deviation", "analytic_valid", "fq_exact_over_n2"]
DECOMPOSE_COLUMNS = ["n_h", "probability", "conditional_qfi", "conditional_qfi_over_n", "husimi_file"]
DISTRIBUTION_COLUMNS = ["n_h", "probability"]

EIGEN_COLUMNS = {
    "lambda_plus": "fq_n_lambda_plus",
    "lambda_minus": "fq_n_lambda_minus",
    "lambda_0": "fq_n_lambda_0",
    "lambda_1": "fq_n_lambda_1",
    "var45": "fq_n_g45",
}


# --- argument parsing -------------------------------------------------------

def parse_grid(text: str, geometric: bool = False) -> List[float]:
    """'start:stop:count' (linear, or geometric when asked) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            start_s, stop_s, count_s = text.split(":")
            start, stop, count = float(start_s), float(stop_s), int(count_s)
            if count < 2:
                raise argparse.ArgumentTypeError(f"grid '{text}' needs at least two points")
            if geometric:
                if start <= 0 or stop <= 0:
                    raise argparse.ArgumentTypeError(f"geometric grid '{text}' needs positive bounds")
                values = np.geomspace(start, stop, count)
            else:
                values = np.linspace(start, stop, count)
            out = [float(v) for v in values]
        else:
            out = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"malformed grid '{text}': {e}") from e
    if not out or not all(math.isfinite(v) for v in out):
        raise argparse.ArgumentTypeError(f"grid '{text}' is empty or not finite")
    return out


def _theta_grid(text: str) -> List[float]:
    return parse_grid(text, geometric=True)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    defaults = config.SWEEP_DEFAULTS
    parser = argparse.ArgumentParser(description="Spin-1 condensate metrology: ground states, ramps, noise and quenches")
    parser.add_argument("--manifest", type=str, default=None,
                        help="Re-run the command recorded in a manifest, resuming from its checkpoint")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=str, default=config.OUTPUT_DIR, help="Output directory")
    common.add_argument("--jobs", type=_positive_int, default=config.DEFAULT_JOBS, help="Worker processes")
    common.add_argument("--log-level", type=str, default=config.LOG_LEVEL,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")

    propagation = argparse.ArgumentParser(add_help=False)
    propagation.add_argument("--method", type=str, default=config.PROPAGATOR_METHOD,
                             choices=["chebyshev", "krylov_expm", "rk_adaptive"], help="Propagator")
    propagation.add_argument("--dt", type=float, default=None, help="Fixed step (default: from spectral bounds)")

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("groundscan", parents=[common], help="Ground-state QFI across q")
    p.add_argument("--n", type=int, nargs="+", default=[defaults.system_size])
    p.add_argument("--q-grid", type=parse_grid, default=None,
                   help=f"q values, 'min:max:steps' (default {defaults.q_min}:{defaults.q_max}:{defaults.q_steps})")
    p.add_argument("--q", type=float, default=None, help="Single q value")

    p = sub.add_parser("ramp", parents=[common, propagation], help="Finite-speed ramps of q")
    p.add_argument("--n", type=int, nargs="+", default=[defaults.system_size])
    p.add_argument("--Q", type=float, nargs="+", default=list(defaults.ramp_q_values))
    p.add_argument("--q-end", type=float, default=0.0)
    p.add_argument("--q-start", type=float, default=defaults.ramp_q_start)
    p.add_argument("--samples", type=int, default=defaults.ramp_samples)
    p.add_argument("--initial", choices=["polar", "ground"], default="polar",
                   help="Start from |k=0> or from the ground state at q-start")

    p = sub.add_parser("noise", parents=[common], help="Peak Fisher information under detection noise")
    p.add_argument("kind", type=str, choices=["tf", "cba"])
    p.add_argument("--n", type=int, nargs="+", default=[defaults.system_size])
    p.add_argument("--sigma-grid", type=parse_grid, default=list(defaults.sigma_grid))
    p.add_argument("--theta-grid", type=_theta_grid, default=None,
                   help=f"theta values, 'min:max:count' geometric (default {defaults.theta_min}:pi/2:{defaults.theta_points})")
    p.add_argument("--no-sigma-max", action="store_true", help="Skip the sigma_max search")

    p = sub.add_parser("quench", parents=[common, propagation], help="Pair creation after a quench")
    p.add_argument("--n", type=int, nargs="+", default=[defaults.system_size])
    p.add_argument("--t-final", type=float, default=defaults.quench_t_final)
    p.add_argument("--samples", type=int, default=defaults.quench_samples)
    p.add_argument("--q", type=float, default=None, help="Quench value (default: resonance)")

    p = sub.add_parser("decompose", parents=[common], help="N_h sectors and Husimi distributions")
    p.add_argument("--n", type=int, default=defaults.system_size)
    p.add_argument("--nh", type=int, nargs="+", default=None)
    p.add_argument("--state", type=str, default="cba", choices=["cba", "tf"])
    p.add_argument("--theta-points", type=_positive_int, default=config.HUSIMI_THETA_POINTS)
    p.add_argument("--phi-points", type=_positive_int, default=config.HUSIMI_PHI_POINTS)

    p = sub.add_parser("verify", parents=[common], help="Run the oracle and identity checks")
    p.add_argument("--full", action="store_true", help="Include the slow noise and ramp checks")
    p.add_argument("--html", action="store_true", default=config.WRITE_HTML_REPORT)

    return parser


# --- per-point work (runs in worker processes) -------------------------------

def _settings(task: Dict[str, Any]) -> PropagatorConfig:
    return PropagatorConfig(method=task["method"], dt=task["dt"])


def _groundscan_point(task: Dict[str, Any]) -> Dict[str, Any]:
    N, q = task["N"], task["q"]
    _, s = ground_state(build_hamiltonian(N, q))
    cov = covariance_matrix(s)
    best = qfi_optimal(s)
    row: Dict[str, Any] = {"N": N, "q": q}
    above = []
    for name, column in EIGEN_COLUMNS.items():
        value = 4.0 * float(cov.eigenvalues[name]) / N
        row[column] = value
        if value > 1.0:
            above.append(name)
    labels = [lab or name for lab, name in zip(best.labels, best.eigen_names)]
    row["above_sql"] = ";".join(above)
    row["dominant_pair"] = ";".join(dict.fromkeys(labels))
    row["n0_over_n"] = mean_zero_population(s) / N
    row["gap"] = spectral_gap(N, q)
    return {"rows": [row]}


def _ramp_point(task: Dict[str, Any]) -> Dict[str, Any]:
    N, Q, q_end = task["N"], task["Q"], task["q_end"]
    schedule = RampSchedule(Q=Q, q_end=q_end, q_start=task["q_start"])
    traj = evolve_ramp(N, schedule, _settings(task), samples=task["samples"],
                       initial=task.get("initial", "polar"))
    conv = conversion_efficiency(traj)
    rows = [
        {
            "t": float(t), "q": float(q),
            "fq_sx_over_n": float(sx) / N, "fq_jx_over_n": float(jx) / N,
            "fidelity": float(f), "conversion_efficiency": float(c),
        }
        for t, q, sx, jx, f, c in zip(traj.times, traj.q, traj.qfi["Sx"], traj.qfi["Jx"], traj.fidelity, conv)
    ]
    target, direction = retention_target(q_end)
    summary = {
        "N": N, "Q": Q, "q_end": q_end, "t_end": schedule.t_end,
        "target": target, "direction": direction,
        "retained": retained_fraction(traj, direction, target),
        "final_fidelity": float(traj.fidelity[-1]),
        "final_conversion": float(conv[-1]),
    }
    return {"rows": rows, "summary": summary}


def _noise_point(task: Dict[str, Any]) -> Dict[str, Any]:
    kind, N = task["kind"], task["N"]
    grid = np.asarray(task["theta_grid"]) if task["theta_grid"] is not None else None
    if task["task"] == "sigma_max":
        value = sigma_max(kind, N, grid)
        return {"summary": {"N": N, "kind": kind, "sigma_max": value, "sigma_max_over_sqrt_n": value / math.sqrt(N)}}
    sigma = task["sigma"]
    theta, fisher = peak_fisher(kind, N, sigma, grid)
    row = {
        "N": N, "sigma": sigma, "sigma_over_sqrt_n": sigma / math.sqrt(N),
        "theta_peak": theta, "fisher_peak": fisher, "fisher_peak_over_n": fisher / N,
        "above_sql": fisher > N,
    }
    return {"rows": [row]}


def _quench_point(task: Dict[str, Any]) -> Dict[str, Any]:
    N = task["N"]
    times = np.linspace(0.0, task["t_final"], task["samples"])
    rows = compare_with_exact(N, times, _settings(task), q=task["q"])
    for row in rows:
        row["N"] = N
        row["analytic_valid"] = bool(row["analytic_valid"])
    return {"rows": rows}


def _input_state(kind: str, N: int):
    return cba_coefficients(N) if kind == "cba" else state_twin_fock(N)


def _decompose_point(task: Dict[str, Any]) -> Dict[str, Any]:
    N = task["N"]
    g = to_gh_basis(_input_state(task["state"], N))
    if task["task"] == "distribution":
        lhs, rhs = decomposition_identity(_input_state(task["state"], N))
        P = h_number_distribution(g)
        return {
            "rows": [{"n_h": n_h, "probability": float(p)} for n_h, p in enumerate(P)],
            "summary": {"qfi_sx": lhs, "sector_sum": rhs},
        }
    n_h = task["n_h"]
    row: Dict[str, Any] = {"n_h": n_h, "probability": 0.0, "conditional_qfi": None,
                           "conditional_qfi_over_n": None, "husimi_file": ""}
    P = h_number_distribution(g)
    if P[n_h] <= 0.0:
        return {"rows": [row]}
    cond = conditional_state(g, n_h)
    row["probability"] = cond.probability
    row["conditional_qfi"] = conditional_qfi(cond)
    row["conditional_qfi_over_n"] = row["conditional_qfi"] / cond.n
    payload: Dict[str, Any] = {"rows": [row]}
    if cond.n >= 1:
        _, _, Q = husimi(cond, task["theta_points"], task["phi_points"])
        row["husimi_file"] = f"husimi_N{N}_Nh{n_h}.csv"
        payload["husimi"] = Q.tolist()
    return payload


WORKERS: Dict[str, Callable[[Dict[str, Any]], Dict[str, Any]]] = {
    "groundscan": _groundscan_point,
    "ramp": _ramp_point,
    "noise": _noise_point,
    "quench": _quench_point,
    "decompose": _decompose_point,
}


def run_point(task: Dict[str, Any]) -> Dict[str, Any]:
    return WORKERS[task["command"]](task)


# --- sweep driver ----------------------------------------------------------

def run_key(command: str, params: Dict[str, Any]) -> str:
    blob = json.dumps({"command": command, "params": params}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def run_sweep(command: str, params: Dict[str, Any], tasks: Sequence[Dict[str, Any]], store: CheckpointStore,
              stats: SweepStats, jobs: int, manifest: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Compute missing points, checkpointing each one; returns all payloads in task order."""
    key = run_key(command, params)
    manifest["run_key"] = key
    store.start_run(key, command, manifest)
    done = store.completed_indices(key)
    pending = [(i, t) for i, t in enumerate(tasks) if i not in done]
    stats.record_total(len(tasks))
    stats.record_resumed(len(tasks) - len(pending))
    if done:
        logger.info(f"{len(tasks) - len(pending)} of {len(tasks)} points restored from checkpoint")

    first_error: Optional[Exception] = None
    first_index = -1

    def _record(i: int, result: Optional[Dict[str, Any]], error: Optional[Exception]) -> None:
        nonlocal first_error, first_index
        if error is None:
            store.save_point(key, i, result)
            stats.record_computed()
            return
        logger.error(f"Point {i} of {command} failed: {error}", exc_info=error)
        stats.record_failure(i, type(error).__name__, error=str(error))
        store.record_failure(key, i, type(error).__name__, str(error))
        if first_error is None or i < first_index:
            first_error, first_index = error, i

    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_point, t): i for i, t in pending}
            for fut in as_completed(futures):
                i = futures[fut]
                try:
                    result = fut.result()
                except Exception as e:
                    _record(i, None, e)
                else:
                    _record(i, result, None)
    else:
        for i, t in pending:
            try:
                result = run_point(t)
            except Exception as e:
                _record(i, None, e)
            else:
                _record(i, result, None)

    if first_error is not None:
        if isinstance(first_error, (SpinorInputError, NumericalFailure)):
            raise first_error
        raise WorkerError(
            f"Point {first_index} of {command} raised {type(first_error).__name__}: {first_error}",
            point=first_index, error_type=type(first_error).__name__,
        ) from first_error
    payloads = store.load_points(key)
    if len(payloads) != len(tasks):
        raise SpinorInputError(
            f"Checkpoint for {command} holds {len(payloads)} readable points, expected {len(tasks)}; "
            f"remove {store.db_path} to recompute."
        )
    return payloads


def _rows(payloads: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
    return [row for p in payloads for row in p.get("rows", [])]


def _label(x: float) -> str:
    return f"{x:g}"


# --- commands -----------------------------------------------------------------

class CommandContext:
    def __init__(self, args: argparse.Namespace, argv: List[str]):
        self.args = args
        self.reporter = Reporter(args.out)
        self.stats = SweepStats(command=args.command)
        self.outputs: List[str] = []
        self.results: Dict[str, Any] = {}
        self.manifest: Dict[str, Any] = {
            "schema_version": config.MANIFEST_SCHEMA_VERSION,
            "command": args.command,
            "argv": list(argv),
            "parameters": {k: v for k, v in vars(args).items() if k not in ("manifest",)},
            "units": config.UNITS,
            "library_version": config.LIBRARY_VERSION,
            "started_at": self.stats.started_at.isoformat(),
            "outputs": [],
            "results": {},
            "status": "running",
        }
        Path(args.out).mkdir(parents=True, exist_ok=True)
        self.store = CheckpointStore(str(Path(args.out) / config.CHECKPOINT_NAME))

    @property
    def manifest_name(self) -> str:
        return f"{self.args.command}_manifest.json"

    def write_manifest(self, status: str) -> Path:
        self.manifest["status"] = status
        self.manifest["outputs"] = list(self.outputs)
        self.manifest["results"] = self.results
        self.manifest["wall_clock_s"] = self.stats.wall_clock()
        return self.reporter.write_manifest(self.manifest_name, self.manifest)

    def sweep(self, params: Dict[str, Any], tasks: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        self.manifest["propagator"] = params.get("propagator")
        return run_sweep(self.args.command, params, tasks, self.store, self.stats, self.args.jobs, self.manifest)

    def csv(self, filename: str, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> None:
        path = self.reporter.write_csv(filename, columns, rows)
        self.outputs.append(str(path))
        logger.info(f"Wrote {path}")


def _check_sizes(values: Sequence[int]) -> List[int]:
    return [validate_system_size(N) for N in values]


def _propagator_params(args: argparse.Namespace) -> Dict[str, Any]:
    PropagatorConfig(method=args.method, dt=args.dt)
    return {"method": args.method, "dt": args.dt}


def cmd_groundscan(ctx: CommandContext) -> None:
    args = ctx.args
    sizes = _check_sizes(args.n)
    d = config.SWEEP_DEFAULTS
    if args.q is not None:
        q_values = [float(args.q)]
    elif args.q_grid is not None:
        q_values = list(args.q_grid)
    else:
        q_values = [float(v) for v in np.linspace(d.q_min, d.q_max, d.q_steps)]
    if any(b <= a for a, b in zip(q_values, q_values[1:])):
        raise SpinorInputError("q grid must be strictly increasing.")
    tasks = [{"command": "groundscan", "N": N, "q": q} for N in sizes for q in q_values]
    rows = _rows(ctx.sweep({"n": sizes, "q": q_values}, tasks))
    for N in sizes:
        ctx.csv(f"groundscan_N{N}.csv", GROUNDSCAN_COLUMNS, [r for r in rows if r["N"] == N])


def cmd_ramp(ctx: CommandContext) -> None:
    args = ctx.args
    sizes = _check_sizes(args.n)
    prop = _propagator_params(args)
    for Q in args.Q:
        RampSchedule(Q=Q, q_end=args.q_end, q_start=args.q_start)
    if args.samples < 2:
        raise SpinorInputError(f"Need at least two samples, got {args.samples}.")
    tasks = [
        {"command": "ramp", "N": N, "Q": Q, "q_end": args.q_end, "q_start": args.q_start,
         "samples": args.samples, "initial": args.initial, **prop}
        for N in sizes for Q in args.Q
    ]
    params = {"n": sizes, "Q": list(args.Q), "q_end": args.q_end, "q_start": args.q_start,
              "samples": args.samples, "initial": args.initial, "propagator": prop}
    payloads = ctx.sweep(params, tasks)
    summaries = []
    for task, payload in zip(tasks, payloads):
        ctx.csv(f"ramp_N{task['N']}_Q{_label(task['Q'])}.csv", RAMP_COLUMNS, payload["rows"])
        summaries.append(payload["summary"])
    ctx.csv("ramp_summary.csv", RAMP_SUMMARY_COLUMNS, summaries)
    ctx.results["retention"] = summaries


def _slope(rows: Sequence[Dict[str, Any]], lo: float = 0.5, hi: float = 5.0) -> float:
    pts = [(r["sigma"], r["fisher_peak"]) for r in rows if lo <= r["sigma"] <= hi and r["fisher_peak"] > 0]
    if len(pts) < 2:
        return float("nan")
    s, f = np.array(pts).T
    return float(np.polyfit(np.log(s), np.log(f), 1)[0])


def cmd_noise(ctx: CommandContext) -> None:
    args = ctx.args
    kind = check_kind(args.kind)
    sizes = _check_sizes(args.n)
    if any(s < 0 for s in args.sigma_grid):
        raise SpinorInputError("Noise widths must be non-negative.")
    theta = args.theta_grid
    if theta is not None and any(t <= 0 or t > math.pi / 2 for t in theta):
        raise SpinorInputError("Theta grid must lie in (0, pi/2].")
    tasks: List[Dict[str, Any]] = []
    for N in sizes:
        tasks.extend({"command": "noise", "task": "peak", "kind": kind, "N": N, "sigma": s, "theta_grid": theta}
                     for s in args.sigma_grid)
        if not args.no_sigma_max:
            tasks.append({"command": "noise", "task": "sigma_max", "kind": kind, "N": N, "theta_grid": theta})
    params = {"kind": kind, "n": sizes, "sigma": list(args.sigma_grid), "theta": theta,
              "sigma_max": not args.no_sigma_max}
    payloads = ctx.sweep(params, tasks)
    rows = _rows(payloads)
    limits = {p["summary"]["N"]: p["summary"] for p in payloads if "summary" in p}
    summaries = []
    for N in sizes:
        per_n = [r for r in rows if r["N"] == N]
        ctx.csv(f"noise_{kind}_N{N}.csv", NOISE_COLUMNS, per_n)
        entry = {"N": N, "kind": kind, "sigma_max": None, "sigma_max_over_sqrt_n": None, "peak_slope": _slope(per_n)}
        entry.update(limits.get(N, {}))
        summaries.append(entry)
    ctx.csv(f"noise_{kind}_summary.csv", NOISE_SUMMARY_COLUMNS, summaries)
    ctx.results["noise"] = summaries
    ctx.manifest["theta_grid"] = theta if theta is not None else default_theta_grid().tolist()


def cmd_quench(ctx: CommandContext) -> None:
    args = ctx.args
    sizes = _check_sizes(args.n)
    prop = _propagator_params(args)
    if not args.t_final > 0:
        raise SpinorInputError(f"t_final must be positive, got {args.t_final}.")
    if args.samples < 2:
        raise SpinorInputError(f"Need at least two samples, got {args.samples}.")
    tasks = [
        {"command": "quench", "N": N, "q": resonance_q(N) if args.q is None else args.q,
         "t_final": args.t_final, "samples": args.samples, **prop}
        for N in sizes
    ]
    params = {"n": sizes, "q": args.q, "t_final": args.t_final, "samples": args.samples, "propagator": prop}
    payloads = ctx.sweep(params, tasks)
    peaks = {}
    deviations = {}
    for task, payload in zip(tasks, payloads):
        ctx.csv(f"quench_N{task['N']}.csv", QUENCH_COLUMNS, payload["rows"])
        peaks[str(task["N"])] = max(r["fq_exact_over_n2"] for r in payload["rows"])
        window = bogoliubov_window(payload["rows"], task["N"])
        deviations[str(task["N"])] = {
            "t_end": window[-1]["t"] if window else None,
            "max_relative_deviation": max((r["relative_deviation"] for r in window), default=None),
        }
    ctx.results["max_fq_over_n2"] = peaks
    ctx.results["quadratic_window"] = deviations


def default_sectors(N: int) -> List[int]:
    """0, N/4, N/2, 3N/4 rounded down to even values (odd N_h never occurs in D=0 states)."""
    return sorted({2 * ((N * f) // 16) for f in (0, 2, 4, 6)})


def cmd_decompose(ctx: CommandContext) -> None:
    args = ctx.args
    N = validate_system_size(args.n)
    if args.state == "tf" and N % 2:
        raise SpinorInputError(f"Twin-Fock needs even N, got {N}.")
    sectors = default_sectors(N) if args.nh is None else list(args.nh)
    bad = [n_h for n_h in sectors if not 0 <= n_h <= N]
    if bad:
        raise SpinorInputError(f"N_h values {bad} outside 0..{N}.")
    base = {"command": "decompose", "N": N, "state": args.state,
            "theta_points": args.theta_points, "phi_points": args.phi_points}
    tasks = [{**base, "task": "distribution"}] + [{**base, "task": "sector", "n_h": n_h} for n_h in sectors]
    params = {"n": N, "state": args.state, "nh": sectors, "theta": args.theta_points, "phi": args.phi_points}
    payloads = ctx.sweep(params, tasks)
    ctx.csv(f"decompose_N{N}_distribution.csv", DISTRIBUTION_COLUMNS, payloads[0]["rows"])
    thetas, phis = husimi_axes(args.theta_points, args.phi_points)
    for payload in payloads[1:]:
        row = payload["rows"][0]
        if "husimi" in payload:
            path = ctx.reporter.write_matrix(row["husimi_file"], thetas, phis, np.asarray(payload["husimi"]))
            ctx.outputs.append(str(path))
    ctx.csv(f"decompose_N{N}.csv", DECOMPOSE_COLUMNS, _rows(payloads[1:]))
    ctx.results["identity"] = payloads[0]["summary"]
    ctx.results["listed_probability"] = sum(p["rows"][0]["probability"] for p in payloads[1:])
    ctx.manifest["husimi_axes"] = {
        "theta": {"start": 0.0, "stop": math.pi, "points": args.theta_points, "rows": True},
        "phi": {"start": 0.0, "stop": 2 * math.pi, "points": args.phi_points, "columns": True},
    }


def cmd_verify(ctx: CommandContext) -> None:
    checks = run_checks(full=ctx.args.full)
    ctx.stats.record_total(len(checks))
    ctx.stats.record_computed(len(checks))
    for c in checks:
        logger.info(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {format_value(c.value)} (reference {format_value(c.reference)})")
    paths = ctx.reporter.write_verify_report(checks, html=ctx.args.html)
    ctx.outputs.extend(str(p) for p in paths)
    ctx.results["passed"] = sum(1 for c in checks if c.passed)
    ctx.results["failed"] = [c.name for c in checks if not c.passed]
    if ctx.results["failed"]:
        raise NumericalFailure("Verification checks failed", failed=", ".join(ctx.results["failed"]))


COMMANDS: Dict[str, Callable[[CommandContext], None]] = {
    "groundscan": cmd_groundscan,
    "ramp": cmd_ramp,
    "noise": cmd_noise,
    "quench": cmd_quench,
    "decompose": cmd_decompose,
    "verify": cmd_verify,
}


def _resolve_argv(parser: argparse.ArgumentParser, argv: List[str]) -> tuple[argparse.Namespace, List[str]]:
    args = parser.parse_args(argv)
    if args.manifest:
        if args.command:
            parser.error("--manifest cannot be combined with a subcommand")
        recorded = load_manifest(args.manifest)
        argv = [str(a) for a in recorded["argv"]]
        args = parser.parse_args(argv)
        if args.manifest or not args.command:
            raise SpinorInputError(f"Manifest '{recorded.get('command')}' does not record a runnable command.")
    elif not args.command:
        parser.error("a subcommand is required (groundscan, ramp, noise, quench, decompose, verify)")
    return args, argv


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, argv = _resolve_argv(parser, argv)
    except SpinorInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(args.log_level)
    ctx: Optional[CommandContext] = None
    try:
        ctx = CommandContext(args, argv)
        ctx.write_manifest("running")
        COMMANDS[args.command](ctx)
    except SpinorInputError as e:
        print(f"error: {e}", file=sys.stderr)
        if ctx:
            ctx.write_manifest("invalid")
        return 2
    except NumericalFailure as e:
        print(f"numerical failure: {e.describe()}", file=sys.stderr)
        if ctx:
            ctx.write_manifest("failed")
            logger.info(ctx.stats.summary_line())
        return 3
    finally:
        if ctx:
            ctx.store.close()

    ctx.write_manifest("complete")
    logger.info(ctx.stats.summary_line())
    return 0


if __name__ == "__main__":
    sys.exit(main())
