"""
experiment.py - sweep one axis of a case and tabulate every method.

One cell per sweep value. A cell derives the case, runs the requested
methods (sdp+recovery, baseline-milp, brute-force) and turns them into
ResultRows. The reference profit of a cell is the baseline MILP when it
proves optimality, else the brute-force oracle when it was run. Rows
without a reference keep optimality empty and say so in their status.

Cells are independent and run in a process pool when workers > 1.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import concurrent.futures
import pathlib
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

# Import external packages
import cvxpy as cp
import numpy as np
import pandas as pd

# Import functions from local modules
from bench.oracle import brute_force_oracle
from bench.scenarios import extend_network, scenario_factors, with_horizon, with_line_capacity, with_ramp, with_scenarios
from market.case_loader import resolve_case
from market.kkt_check import compute_optimality
from market.market_model import MarketCase
from mip.milp_reform import BigMConfig, build_milp, solve_milp
from mip.mip_contract import HighsMipSolver, MipStatus
from qcqp.qcqp_multi import assemble_multi
from recovery.algorithm_one import RecoveryConfig, recover_case
from relax.moment_tools import relaxation_gap_pct
from utils.utils_config import get_workers
from utils.utils_errors import NodalBiddingError, UndefinedRatioError
from utils.utils_logger import logger

#####################################
# Types
#####################################

METHODS: tuple[str, ...] = ("sdp+recovery", "baseline-milp", "brute-force")
SWEEPS: tuple[str, ...] = ("scenarios", "horizon", "line-capacity", "ramp", "buses")
COLUMNS: tuple[str, ...] = ("method", "sweep", "profit", "optimality", "gap_pct", "time_s", "iterations", "status")


@dataclass(frozen=True)
class ExperimentSpec:
    case: str
    T: int = 1
    K: int = 1
    sweep: str = "scenarios"
    values: tuple[float, ...] = (1,)
    methods: tuple[str, ...] = ("sdp+recovery", "baseline-milp")
    time_limit: Optional[float] = None
    start_hours: tuple[int, ...] = (1,)
    bigm_scale: Optional[float] = None
    eps0: Optional[float] = None
    delta: Optional[float] = None
    workers: Optional[int] = None
    output: Optional[str] = None

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"unknown sweep '{self.sweep}'; choose from {SWEEPS}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
        if not self.values:
            raise ValueError("a sweep needs at least one value")
        if self.sweep in ("line-capacity", "ramp") and any(not v > 0 for v in self.values):
            raise ValueError(f"{self.sweep} values must be positive, got {list(self.values)}")


@dataclass
class ResultRow:
    method: str
    sweep: float
    profit: Optional[float] = None
    optimality: Optional[float] = None
    gap_pct: Optional[float] = None
    time_s: Optional[float] = None
    iterations: Optional[int] = None
    status: str = ""
    extra: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {c: getattr(self, c) for c in COLUMNS}


#####################################
# Cells
#####################################


def derive_case(base: MarketCase, spec: ExperimentSpec, value: float, start_hour: int) -> MarketCase:
    """The case of one sweep value and horizon window."""
    T, K = spec.T, spec.K
    if spec.sweep == "scenarios":
        K = int(value)
    elif spec.sweep == "horizon":
        T = int(value)
    case = with_horizon(with_scenarios(base, scenario_factors(K)), T, start_hour)
    if spec.sweep == "line-capacity":
        case = with_line_capacity(case, float(value))
    elif spec.sweep == "ramp":
        case = with_ramp(case, float(value))
    elif spec.sweep == "buses":
        case = extend_network(case, int(value))
    return case


# Failures recorded in the result row instead of aborting the table.
RECORDED_ERRORS = (NodalBiddingError, ValueError, ArithmeticError, cp.error.SolverError)


def _attempt(out: dict[str, dict], method: str, run: Callable[[], dict]) -> None:
    start = time.perf_counter()
    try:
        out[method] = run()
    except RECORDED_ERRORS as e:
        logger.warning(f"{method} failed: {type(e).__name__}: {e}")
        out[method] = {"status": f"error: {e}"}
    out[method]["time_s"] = time.perf_counter() - start


def _run_methods(case: MarketCase, spec: ExperimentSpec) -> dict[str, dict]:
    """Raw results of every method on one case; errors are recorded, not raised."""
    out: dict[str, dict] = {}
    mip = HighsMipSolver(time_limit=spec.time_limit)
    bigm = BigMConfig.default_for(case, spec.bigm_scale)

    def baseline() -> dict:
        sol = solve_milp(build_milp(assemble_multi(case), bigm), mip)
        return {"profit": sol.objective, "status": sol.status.value, "optimal": sol.status == MipStatus.OPTIMAL}

    def oracle() -> dict:
        result = brute_force_oracle(case)
        return {"profit": result.profit, "status": "grid", "tolerance": result.tolerance}

    def relaxation() -> dict:
        config = RecoveryConfig.from_env(eps0=spec.eps0, delta=spec.delta)
        report, moment = recover_case(case, config, mip_solver=mip, bigm=bigm)
        return {
            "profit": report.profit,
            "status": "feasible" if report.feasible else "infeasible",
            "iterations": report.n_iterations,
            "bound": moment.objective,
        }

    for method, run in (("baseline-milp", baseline), ("brute-force", oracle), ("sdp+recovery", relaxation)):
        if method in spec.methods:
            _attempt(out, method, run)
    return out


def _reference(results: dict[str, dict]) -> tuple[Optional[float], str]:
    milp = results.get("baseline-milp", {})
    if milp.get("optimal") and milp.get("profit") is not None:
        return milp["profit"], "baseline-milp"
    oracle = results.get("brute-force", {})
    if oracle.get("profit") is not None:
        return oracle["profit"], "brute-force"
    return None, "none"


def _window_rows(case: MarketCase, spec: ExperimentSpec, value: float) -> list[ResultRow]:
    results = _run_methods(case, spec)
    reference, source = _reference(results)
    bound = results.get("sdp+recovery", {}).get("bound")
    rows = []
    for method in spec.methods:
        r = results[method]
        row = ResultRow(method=method, sweep=value, profit=r.get("profit"), time_s=r.get("time_s"), iterations=r.get("iterations"), status=r["status"])
        if row.profit is not None and reference is not None:
            try:
                row.optimality = compute_optimality(row.profit, reference)
            except UndefinedRatioError:
                row.status += "; no positive reference"
        elif reference is None:
            row.status += "; no reference"
        if bound is not None and reference is not None:
            try:
                row.gap_pct = relaxation_gap_pct(bound, reference)
            except UndefinedRatioError:
                pass
        row.extra = {"reference": source, "case": case.name}
        rows.append(row)
    return rows


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def run_cell(spec: ExperimentSpec, value: float) -> list[ResultRow]:
    """All methods at one sweep value, averaged over the horizon windows."""
    base = resolve_case(spec.case)
    per_window = []
    for hour in spec.start_hours:
        try:
            case = derive_case(base, spec, value, hour)
        except RECORDED_ERRORS as e:
            logger.error(f"Sweep value {value}, start hour {hour}: {e}")
            per_window.append([ResultRow(method=m, sweep=value, status=f"error: {e}") for m in spec.methods])
            continue
        logger.info(f"Cell {spec.sweep}={value}, start hour {hour}: case '{case.name}' T={case.horizon} K={case.n_scenarios}")
        per_window.append(_window_rows(case, spec, value))
    if len(per_window) == 1:
        return per_window[0]
    rows = []
    for i, method in enumerate(spec.methods):
        group = [w[i] for w in per_window]
        iterations = [r.iterations for r in group if r.iterations is not None]
        rows.append(
            ResultRow(
                method=method,
                sweep=value,
                profit=_mean([r.profit for r in group]),
                optimality=_mean([r.optimality for r in group]),
                gap_pct=_mean([r.gap_pct for r in group]),
                time_s=_mean([r.time_s for r in group]),
                iterations=max(iterations) if iterations else None,
                status="; ".join(sorted({r.status for r in group})),
            )
        )
    return rows


def run_experiment(spec: ExperimentSpec) -> pd.DataFrame:
    """Rows per (method, sweep value) in a DataFrame with the report columns."""
    workers = spec.workers or get_workers()
    logger.info(f"Experiment on '{spec.case}': sweep {spec.sweep} over {list(spec.values)}, methods {list(spec.methods)}, {workers} workers")
    rows: list[ResultRow] = []
    if workers > 1 and len(spec.values) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for cell in pool.map(run_cell, [spec] * len(spec.values), spec.values):
                rows.extend(cell)
    else:
        for value in spec.values:
            rows.extend(run_cell(spec, value))
    table = pd.DataFrame([r.as_record() for r in rows], columns=list(COLUMNS))
    if spec.output:
        emit_report(table, spec.output)
    return table


#####################################
# Reports
#####################################


def emit_report(table: Union[pd.DataFrame, Sequence[ResultRow]], path: Union[str, pathlib.Path], fmt: Optional[str] = None) -> pathlib.Path:
    """Write the table as CSV or JSON records; the format follows the suffix unless given."""
    if not isinstance(table, pd.DataFrame):
        table = pd.DataFrame([r.as_record() for r in table], columns=list(COLUMNS))
    if table.empty:
        raise ValueError("refusing to write an empty report")
    path = pathlib.Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    path.parent.mkdir(parents=True, exist_ok=True)
    out = table.reindex(columns=list(COLUMNS)).copy()
    out["optimality"] = out["optimality"].map(lambda v: None if pd.isna(v) else round(float(v), 4))
    if fmt == "csv":
        # fixed four decimals for the ratio column
        text = out.assign(optimality=out["optimality"].map(lambda v: "" if v is None or pd.isna(v) else f"{v:.4f}"))
        text.to_csv(path, index=False, float_format="%.10g")
    elif fmt == "json":
        out.to_json(path, orient="records", indent=2)
    else:
        raise ValueError(f"unknown report format '{fmt}'; use csv or json")
    logger.info(f"Wrote {len(out)} rows to {path}")
    return path


def read_report(path: Union[str, pathlib.Path]) -> pd.DataFrame:
    path = pathlib.Path(path)
    if path.suffix == ".json":
        table = pd.read_json(path, orient="records")
    else:
        table = pd.read_csv(path)
    return table.reindex(columns=list(COLUMNS))
