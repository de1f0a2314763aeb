"""
mip_contract.py - submit a mixed-integer linear program, get a normalized answer.

The contract is solver-neutral: an objective to maximize, one block of linear
rows lb <= A z <= ub, variable bounds and integrality marks. The HiGHS
implementation goes through scipy.optimize.milp.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol

# Import external packages
import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

# Import functions from local modules
from utils.utils_config import get_mip_gap, get_mip_time_limit
from utils.utils_errors import SolverFailureError
from utils.utils_logger import logger


class MipStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE_GAP = "feasible-gap"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"


@dataclass
class MipResult:
    status: MipStatus
    x: Optional[np.ndarray]
    objective: Optional[float]
    bound: Optional[float]
    gap: Optional[float]
    solve_time: float = 0.0
    max_violation: float = 0.0

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


class MipSolver(Protocol):
    def submit(
        self,
        c: np.ndarray,
        A,
        lb: np.ndarray,
        ub: np.ndarray,
        lower: np.ndarray,
        upper: np.ndarray,
        integrality: np.ndarray,
    ) -> MipResult: ...


def row_violation(A, lb: np.ndarray, ub: np.ndarray, x: np.ndarray) -> float:
    """Largest amount by which lb <= A x <= ub is violated."""
    if A.shape[0] == 0:
        return 0.0
    ax = A @ x
    return float(max(np.max(lb - ax, initial=0.0), np.max(ax - ub, initial=0.0)))


class HighsMipSolver:
    """HiGHS branch and bound through scipy; maximizes c^T z."""

    def __init__(self, time_limit: Optional[float] = None, mip_gap: Optional[float] = None):
        self.time_limit = get_mip_time_limit() if time_limit is None else time_limit
        self.mip_gap = get_mip_gap() if mip_gap is None else mip_gap

    def submit(self, c, A, lb, ub, lower, upper, integrality) -> MipResult:
        options = {"disp": False, "time_limit": self.time_limit, "mip_rel_gap": self.mip_gap}
        constraints = LinearConstraint(A, lb, ub) if A.shape[0] else ()
        start = time.perf_counter()
        res = milp(
            c=-np.asarray(c, dtype=float),
            constraints=constraints,
            integrality=integrality,
            bounds=Bounds(lower, upper),
            options=options,
        )
        elapsed = time.perf_counter() - start

        if res.status in (3, 4):
            logger.error(f"HiGHS MILP failed with status {res.status}: {res.message}")
            raise SolverFailureError(f"MILP solver failed: {res.message}")
        if res.status == 2:
            logger.info(f"MILP infeasible after {elapsed:.2f}s")
            return MipResult(status=MipStatus.INFEASIBLE, x=None, objective=None, bound=None, gap=None, solve_time=elapsed)

        x = np.asarray(res.x, dtype=float) if res.x is not None else None
        bound = getattr(res, "mip_dual_bound", None)
        bound = -float(bound) if bound is not None and np.isfinite(bound) else None
        gap = getattr(res, "mip_gap", None)
        gap = float(gap) if gap is not None else None
        if res.status == 0:
            status = MipStatus.OPTIMAL
        else:
            status = MipStatus.FEASIBLE_GAP if x is not None else MipStatus.TIMEOUT
            logger.warning(f"MILP stopped at the time limit ({self.time_limit}s) with status {status.value}")
        if x is None:
            return MipResult(status=status, x=None, objective=None, bound=bound, gap=gap, solve_time=elapsed)

        binary = np.asarray(integrality) > 0
        x[binary] = np.round(x[binary])
        violation = row_violation(A, lb, ub, x)
        if violation > 1e-6:
            logger.warning(f"MILP incumbent violates its rows by {violation:.2e}")
        objective = float(np.asarray(c, dtype=float) @ x)
        logger.info(f"MILP {status.value} in {elapsed:.2f}s, objective {objective:.6f}, gap {gap}")
        return MipResult(status=status, x=x, objective=objective, bound=bound, gap=gap, solve_time=elapsed, max_violation=violation)
