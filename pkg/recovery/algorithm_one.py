"""
algorithm_one.py - turn a relaxed moment solution into feasible bids.

1. Lift the moment candidates y* of every block to x = O y* + xbar.
2. If the lifted point already satisfies every constraint, return it.
3. Otherwise, starting from eps0, classify every complementarity pair at the
   original y*, fix the pairs with a clear branch and solve the MILP that
   keeps binaries only for the rest. The first incumbent is returned.
4. When the MILP is infeasible, lower eps by eps_step and classify again.
   Once eps reaches zero the baseline MILP (every pair binary) is solved.

The classification is always evaluated at the original y*; the SDP is not
re-solved between iterations.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import json
import pathlib
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

# Import external packages
import numpy as np

# Import functions from local modules
from market.market_model import MarketCase
from mip.milp_reform import BigMConfig, build_augmented_milp, build_milp, solve_milp
from mip.mip_contract import MipSolver
from qcqp.qcqp_multi import MultiQcqp, assemble_multi, check_multi_feasibility
from recovery.slackness import classify
from relax.conic_contract import ConicSolver
from relax.moment_tools import MomentSolution
from relax.sdp_multi import solve_multi_sdp
from utils.utils_config import get_delta, get_eps0, get_eps_step, get_slack_scale, get_tolerance
from utils.utils_errors import DimensionMismatchError, RecoveryExhaustedError, SolverFailureError
from utils.utils_logger import logger

#####################################
# Configuration and report
#####################################


@dataclass(frozen=True)
class RecoveryConfig:
    eps0: float = 0.1
    delta: float = 1.0
    eps_step: float = 0.01
    slack_scale: float = 100.0
    tol: float = 1e-6

    @classmethod
    def from_env(cls, **overrides) -> "RecoveryConfig":
        """Environment values, with any non-None keyword taking precedence."""
        values = {
            "eps0": get_eps0(),
            "delta": get_delta(),
            "eps_step": get_eps_step(),
            "slack_scale": get_slack_scale(),
            "tol": get_tolerance(),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class IterationRecord:
    iteration: int
    eps: float
    counts: dict[str, int]
    status: str
    objective: Optional[float]
    solve_time: float
    n_binaries: int


@dataclass
class RecoveryReport:
    case: str
    early_exit: bool
    fallback: bool
    iterations: list[IterationRecord]
    xs: list[np.ndarray]
    bids: list[list[float]]
    profit: float
    residuals: dict[str, float]
    sdp_time: float
    milp_time: float
    config: RecoveryConfig
    classified_at: str = "original y*"
    milp_objective: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    @property
    def feasible(self) -> bool:
        return self.residuals.get("max", np.inf) < self.config.tol

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "early_exit": self.early_exit,
            "fallback": self.fallback,
            "iterations": [asdict(r) for r in self.iterations],
            "bids": self.bids,
            "profit": self.profit,
            "milp_objective": self.milp_objective,
            "residuals": self.residuals,
            "sdp_time": self.sdp_time,
            "milp_time": self.milp_time,
            "classified_at": self.classified_at,
            "config": asdict(self.config),
            "extra": self.extra,
            "xs": [x.tolist() for x in self.xs],
        }

    def to_json(self, path: Optional[Union[str, pathlib.Path]] = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            path = pathlib.Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            logger.info(f"Recovery report written to {path}")
        return text


#####################################
# Algorithm
#####################################


def _bids(multi: MultiQcqp, xs: list[np.ndarray]) -> list[list[float]]:
    out = []
    for q, x in zip(multi.blocks, xs):
        out.append([float(v) for v in x[q.layout.slice("bid")]] if q.layout is not None else [])
    return out


def _finish(multi, xs, config, iterations, sdp_time, milp_time, early_exit, fallback, milp_objective=None) -> RecoveryReport:
    residuals = check_multi_feasibility(multi, xs)
    if residuals["max"] >= config.tol:
        logger.warning(f"Recovered point violates its constraints by {residuals['max']:.2e}")
    report = RecoveryReport(
        case=multi.case.name if multi.case is not None else "qcqp",
        early_exit=early_exit,
        fallback=fallback,
        iterations=iterations,
        xs=list(xs),
        bids=_bids(multi, xs),
        profit=multi.objective(xs),
        residuals=residuals,
        sdp_time=sdp_time,
        milp_time=milp_time,
        config=config,
        milp_objective=milp_objective,
    )
    logger.info(
        f"Recovery done: profit {report.profit:.6f}, {report.n_iterations} MILP iterations, "
        f"early exit {early_exit}, fallback {fallback}, max residual {residuals['max']:.2e}"
    )
    return report


def algorithm1(
    multi: MultiQcqp,
    moment: MomentSolution,
    config: Optional[RecoveryConfig] = None,
    solver: Optional[MipSolver] = None,
    bigm: Optional[BigMConfig] = None,
) -> RecoveryReport:
    """Recover a feasible point of the (multi-block) QCQP from its moment relaxation."""
    config = config or RecoveryConfig.from_env()
    if not moment.ys:
        raise SolverFailureError(f"moment relaxation has no solution (status {moment.status})")
    if len(moment.ys) != multi.n_blocks:
        raise DimensionMismatchError(f"{len(moment.ys)} moment candidates for {multi.n_blocks} blocks")

    xs = multi.lift_all(moment.ys)
    if check_multi_feasibility(multi, xs)["max"] < config.tol:
        logger.info("Lifted moment candidate is feasible; no MILP needed")
        return _finish(multi, xs, config, [], moment.solve_time, 0.0, early_exit=True, fallback=False)

    iterations: list[IterationRecord] = []
    milp_time = 0.0
    eps = config.eps0
    previous = None
    while eps > 0:
        classification = classify(multi.reduced, moment.ys, eps, config.delta, config.slack_scale)
        decisions = classification.decisions()
        if decisions == previous:
            eps = round(eps - config.eps_step, 12)
            continue
        previous = decisions
        milp = build_augmented_milp(multi, decisions, bigm)
        start = time.perf_counter()
        sol = solve_milp(milp, solver)
        milp_time += time.perf_counter() - start
        iterations.append(
            IterationRecord(
                iteration=len(iterations) + 1,
                eps=eps,
                counts=classification.counts(),
                status=sol.status.value,
                objective=sol.objective,
                solve_time=sol.solve_time,
                n_binaries=sol.n_binaries,
            )
        )
        logger.info(f"Iteration {len(iterations)} at eps={eps}: {sol.status.value}, objective {sol.objective}")
        if sol.ok:
            return _finish(multi, sol.xs, config, iterations, moment.solve_time, milp_time, False, False, sol.objective)
        eps = round(eps - config.eps_step, 12)

    logger.warning("Epsilon exhausted without an incumbent; solving the baseline MILP")
    milp = build_milp(multi, bigm)
    start = time.perf_counter()
    sol = solve_milp(milp, solver)
    milp_time += time.perf_counter() - start
    iterations.append(
        IterationRecord(
            iteration=len(iterations) + 1,
            eps=0.0,
            counts={"keep-binary": milp.n_binaries},
            status=sol.status.value,
            objective=sol.objective,
            solve_time=sol.solve_time,
            n_binaries=sol.n_binaries,
        )
    )
    if sol.ok:
        return _finish(multi, sol.xs, config, iterations, moment.solve_time, milp_time, False, True, sol.objective)
    logger.error(f"Baseline MILP ended with status {sol.status.value}; nothing to return")
    raise RecoveryExhaustedError(f"no feasible point after {len(iterations)} MILP solves (last status {sol.status.value})")


def recover_case(
    case: MarketCase,
    config: Optional[RecoveryConfig] = None,
    sdp_solver: Optional[ConicSolver] = None,
    mip_solver: Optional[MipSolver] = None,
    bigm: Optional[BigMConfig] = None,
) -> tuple[RecoveryReport, MomentSolution]:
    """Assemble, relax and recover one case end to end."""
    multi = assemble_multi(case)
    moment = solve_multi_sdp(multi, sdp_solver)
    report = algorithm1(multi, moment, config, mip_solver, bigm)
    report.extra["sdp_bound"] = moment.objective
    report.extra["ranks"] = moment.ranks
    return report, moment
