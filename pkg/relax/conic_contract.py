"""
conic_contract.py - one entry point for every semidefinite program.

Builders return a ConicProblem (a cvxpy Problem plus the variables callers
read back). A ConicSolver submits it and returns a ConicResult with a
normalized status. PSD variables come back projected onto the PSD cone, so
their smallest eigenvalue is never below zero by more than roundoff.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import pathlib
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Protocol, Union

# Import external packages
import cvxpy as cp
import numpy as np

# Import functions from local modules
from utils.utils_config import get_sdp_fallback, get_sdp_solver
from utils.utils_errors import SolverFailureError
from utils.utils_logger import logger

#####################################
# Problem and result types
#####################################


class ConicStatus(str, Enum):
    OPTIMAL = "optimal"
    INACCURATE = "optimal-inaccurate"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"


_STATUS_MAP = {
    cp.OPTIMAL: ConicStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: ConicStatus.INACCURATE,
    cp.INFEASIBLE: ConicStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: ConicStatus.INFEASIBLE,
    cp.UNBOUNDED: ConicStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: ConicStatus.UNBOUNDED,
}


@dataclass
class ConicProblem:
    kind: str
    problem: cp.Problem
    variables: dict[str, cp.Variable]
    psd_variables: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)
    # affine matrix expressions constrained PSD, read back after a solve
    expressions: dict[str, cp.Expression] = field(default_factory=dict)

    @property
    def psd_orders(self) -> list[int]:
        orders = [self.variables[name].shape[0] for name in self.psd_variables]
        return orders + [expr.shape[0] for expr in self.expressions.values()]

    @property
    def matrix_scalar_count(self) -> int:
        """Free scalars in the PSD matrix variables, d (d + 1) / 2 each."""
        return sum(d * (d + 1) // 2 for d in self.psd_orders)

    @property
    def scalar_count(self) -> int:
        """Scalars across every variable, symmetric matrices counted once per pair."""
        total = 0
        for var in self.problem.variables():
            if var.is_symmetric() and len(var.shape) == 2 and var.shape[0] == var.shape[1] and var.shape[0] > 1:
                d = var.shape[0]
                total += d * (d + 1) // 2
            else:
                total += int(np.prod(var.shape)) if var.shape else 1
        return total


@dataclass
class ConicResult:
    status: ConicStatus
    objective: Optional[float]
    values: dict[str, np.ndarray]
    solver: str
    solve_time: float
    raw_status: str = ""

    @property
    def ok(self) -> bool:
        """Solved to full accuracy; only such results give bounds."""
        return self.status == ConicStatus.OPTIMAL

    @property
    def usable(self) -> bool:
        """A point came back, possibly inaccurate; good enough to recover from."""
        return self.status in (ConicStatus.OPTIMAL, ConicStatus.INACCURATE)


class ConicSolver(Protocol):
    def submit(self, problem: ConicProblem) -> ConicResult: ...


#####################################
# cvxpy-backed solver
#####################################


def project_psd(matrix: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm."""
    sym = 0.5 * (matrix + matrix.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals.min() >= 0:
        return sym
    clipped = np.maximum(eigvals, 0.0)
    return (eigvecs * clipped) @ eigvecs.T


class CvxpyConicSolver:
    """Solve with the configured cvxpy solver, retrying once with the fallback."""

    def __init__(self, solver: Optional[str] = None, fallback: Optional[str] = None, verbose: bool = False, **options):
        self.solver = (solver or get_sdp_solver()).upper()
        self.fallback = (fallback or get_sdp_fallback()).upper()
        self.verbose = verbose
        self.options = options

    def _candidates(self) -> list[str]:
        installed = set(cp.installed_solvers())
        order = [s for s in (self.solver, self.fallback) if s in installed]
        if not order:
            raise SolverFailureError(f"neither {self.solver} nor {self.fallback} is installed; have {sorted(installed)}")
        return list(dict.fromkeys(order))

    def submit(self, problem: ConicProblem) -> ConicResult:
        last_error: Optional[Exception] = None
        inaccurate: Optional[ConicResult] = None
        candidates = self._candidates()
        for name in candidates:
            start = time.perf_counter()
            try:
                problem.problem.solve(solver=name, verbose=self.verbose, **self.options)
            except cp.SolverError as e:
                last_error = e
                logger.warning(f"{name} failed on {problem.kind} SDP: {e}; trying next solver")
                continue
            elapsed = time.perf_counter() - start
            raw = problem.problem.status
            status = _STATUS_MAP.get(raw, ConicStatus.NUMERICAL_FAILURE)
            result = self._read(problem, status, name, elapsed, str(raw))
            if status == ConicStatus.INACCURATE:
                logger.warning(f"{name} returned an inaccurate optimum for {problem.kind} SDP")
                inaccurate = inaccurate or result
                continue
            if status == ConicStatus.NUMERICAL_FAILURE and name != candidates[-1]:
                logger.warning(f"{name} ended with status '{raw}' on {problem.kind} SDP; trying next solver")
                continue
            if status != ConicStatus.OPTIMAL and inaccurate is not None:
                break
            logger.info(f"{problem.kind} SDP via {name}: {status.value} in {elapsed:.2f}s, objective {result.objective}")
            return result
        if inaccurate is not None:
            logger.warning(f"{problem.kind} SDP: keeping the inaccurate {inaccurate.solver} result, objective {inaccurate.objective}")
            return inaccurate
        logger.error(f"No solver could handle {problem.kind} SDP")
        raise SolverFailureError(f"all SDP solvers failed on {problem.kind}: {last_error}")

    @staticmethod
    def _read(problem: ConicProblem, status: ConicStatus, name: str, elapsed: float, raw: str) -> ConicResult:
        values = {}
        objective = None
        if status in (ConicStatus.OPTIMAL, ConicStatus.INACCURATE):
            for key, var in problem.variables.items():
                value = np.asarray(var.value, dtype=float) if var.value is not None else None
                if value is not None and key in problem.psd_variables:
                    value = project_psd(value)
                values[key] = value
            for key, expr in problem.expressions.items():
                values[key] = np.asarray(expr.value, dtype=float) if expr.value is not None else None
            objective = float(problem.problem.value)
        return ConicResult(status=status, objective=objective, values=values, solver=name, solve_time=elapsed, raw_status=raw)


#####################################
# Export
#####################################


def export_conic(problem: ConicProblem, path: Union[str, pathlib.Path]) -> pathlib.Path:
    """Write the canonical conic form min c^T x s.t. b - A x in K as text.

    Layout: a header with the cone dimensions, then `c <j> <value>` lines,
    `A <i> <j> <value>` triplets and `b <i> <value>` lines.
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data, _, _ = problem.problem.get_problem_data(cp.SCS)
    dims = data["dims"]
    A = data["A"].tocoo()
    c = np.asarray(data["c"]).reshape(-1)
    b = np.asarray(data["b"]).reshape(-1)
    lines = [
        f"# conic problem '{problem.kind}': minimize c^T x subject to b - A x in K",
        f"variables {c.size}",
        f"rows {b.size}",
        f"cone zero {getattr(dims, 'zero', 0)}",
        f"cone nonneg {getattr(dims, 'nonneg', 0)}",
        f"cone soc {' '.join(str(s) for s in dims.soc)}",
        f"cone psd {' '.join(str(s) for s in dims.psd)}",
        f"cone exp {getattr(dims, 'exp', 0)}",
    ]
    lines += [f"c {j} {v:.17g}" for j, v in enumerate(c) if v != 0.0]
    lines += [f"A {i} {j} {v:.17g}" for i, j, v in zip(A.row, A.col, A.data)]
    lines += [f"b {i} {v:.17g}" for i, v in enumerate(b) if v != 0.0]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Exported {problem.kind} conic problem to {path} ({A.nnz} nonzeros)")
    return path
