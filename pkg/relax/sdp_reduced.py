"""
sdp_reduced.py - SDP relaxations of an equality-free (reduced) QCQP.

Certificate form (minimize Lam):

    Lam E11 - C - sym(e1 (G^T alpha)^T) - G^T rho G - sym(Gu^T diag(beta) Gw)  >= 0 (PSD)
    alpha >= 0, rho >= 0 and symmetric, beta free

Moment form (its dual, maximize <C, Y>):

    Y PSD, Y[0, 0] = 1, G Y e1 >= 0, G Y G^T >= 0, gu_z^T Y gw_z = 0

The rho terms are the pairwise products of inequalities. They can be turned
off with pairwise=False for a plain Lagrangian bound.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field
from typing import Optional

# Import external packages
import cvxpy as cp
import numpy as np

# Import functions from local modules
from qcqp.qcqp_reduce import ReducedForm
from relax.conic_contract import ConicProblem, ConicSolver, ConicStatus, CvxpyConicSolver
from relax.moment_tools import MomentSolution, extract_candidate
from utils.utils_logger import logger

#####################################
# Certificate
#####################################

# Smallest eigenvalue (relative to the largest entry) and multiplier sign
# violations tolerated before a certificate is rejected.
CERTIFICATE_TOL = 1e-6


@dataclass
class CertificateSolution:
    """Certificate bound; multipliers refer to unit-norm rows and C / objective_scale."""

    kind: str
    status: ConicStatus
    bound: Optional[float]
    multipliers: dict[str, np.ndarray] = field(default_factory=dict)
    solver: str = ""
    solve_time: float = 0.0
    min_eigenvalue: Optional[float] = None
    feasible: bool = False
    objective_scale: float = 1.0


def _sym(expr):
    return 0.5 * (expr + expr.T)


def unit_rows(M: np.ndarray) -> np.ndarray:
    """Rows scaled to unit Euclidean norm; zero rows stay zero."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M
    norms = np.linalg.norm(M, axis=1)
    norms[norms == 0.0] = 1.0
    return M / norms[:, None]


def objective_scale(C: np.ndarray) -> float:
    return max(1.0, float(np.abs(C).max())) if C.size else 1.0


def certificate_terms(order: int, C: np.ndarray, G: np.ndarray, Gu: np.ndarray, Gw: np.ndarray, pairwise: bool = True):
    """Variables and the affine matrix expression of the certificate.

    The rows of G, Gu and Gw are normalized (the feasible set does not
    change) and C is divided by objective_scale(C), so Lam comes back in
    scaled units.
    """
    G, Gu, Gw = unit_rows(G), unit_rows(Gu), unit_rows(Gw)
    C = np.asarray(C, dtype=float) / objective_scale(C)
    n_ineq, n_pairs = G.shape[0], Gu.shape[0]
    lam = cp.Variable(name="Lam")
    e11 = np.zeros((order, order))
    e11[0, 0] = 1.0
    e1 = np.zeros((1, order))
    e1[0, 0] = 1.0
    expr = lam * e11 - C
    variables = {"Lam": lam}
    constraints = []
    if n_ineq:
        alpha = cp.Variable(n_ineq, nonneg=True, name="alpha")
        column = cp.reshape(G.T @ alpha, (order, 1), order="F") @ e1
        expr = expr - _sym(column)
        variables["alpha"] = alpha
        if pairwise:
            rho = cp.Variable((n_ineq, n_ineq), symmetric=True, name="rho")
            constraints.append(rho >= 0)
            expr = expr - G.T @ rho @ G
            variables["rho"] = rho
    if n_pairs:
        beta = cp.Variable(n_pairs, name="beta")
        expr = expr - _sym(Gu.T @ cp.diag(beta) @ Gw)
        variables["beta"] = beta
    return variables, expr, constraints


def certificate_problem(kind: str, order: int, C: np.ndarray, variables: dict, expr, constraints: list) -> ConicProblem:
    """Minimize Lam subject to the symmetrized expression being PSD."""
    certificate = _sym(expr)
    constraints = constraints + [certificate >> 0]
    problem = cp.Problem(cp.Minimize(variables["Lam"]), constraints)
    return ConicProblem(
        kind=kind,
        problem=problem,
        variables=variables,
        meta={"order": order, "objective_scale": objective_scale(C)},
        expressions={"certificate": certificate},
    )


def build_reduced_sdp(reduced: ReducedForm, pairwise: bool = True) -> ConicProblem:
    """Certificate SDP over S^{r+1}; its optimal Lam bounds the QCQP optimum from above."""
    order = reduced.order
    variables, expr, constraints = certificate_terms(order, reduced.C, reduced.G, reduced.Gu, reduced.Gw, pairwise)
    logger.debug(f"Reduced certificate SDP: PSD order {order}, {reduced.G.shape[0]} inequalities, {reduced.Gu.shape[0]} pairs")
    return certificate_problem("reduced-certificate", order, reduced.C, variables, expr, constraints)


def certificate_violation(values: dict[str, Optional[np.ndarray]]) -> tuple[Optional[float], float]:
    """(smallest eigenvalue of the certificate, worst relative violation) of a solved certificate."""
    matrix = values.get("certificate")
    if matrix is None:
        return None, float("inf")
    matrix = 0.5 * (matrix + matrix.T)
    size = max(1.0, float(np.abs(matrix).max()))
    min_eig = float(np.linalg.eigvalsh(matrix).min())
    worst = max(0.0, -min_eig) / size
    for key in ("alpha", "rho"):
        value = values.get(key)
        if value is not None and value.size:
            worst = max(worst, float(max(0.0, -value.min())))
    return min_eig, worst


def solve_certificate(problem: ConicProblem, solver: Optional[ConicSolver] = None, tol: float = CERTIFICATE_TOL) -> CertificateSolution:
    """Solve a certificate SDP; the bound is kept only for an accurate, checked certificate."""
    solver = solver or CvxpyConicSolver()
    result = solver.submit(problem)
    scale = float(problem.meta.get("objective_scale", 1.0))
    multipliers = {k: v for k, v in result.values.items() if k not in ("Lam", "certificate")}
    min_eig, worst = certificate_violation(result.values) if result.usable else (None, float("inf"))
    feasible = worst <= tol
    lam = result.values.get("Lam")
    bound = None
    if result.ok and feasible and lam is not None:
        bound = scale * float(lam)
    elif result.usable:
        logger.warning(
            f"{problem.kind}: no bound from {result.solver} (status {result.status.value}, "
            f"min eigenvalue {min_eig}, worst violation {worst:.2e})"
        )
    return CertificateSolution(
        kind=problem.kind,
        status=result.status,
        bound=bound,
        multipliers=multipliers,
        solver=result.solver,
        solve_time=result.solve_time,
        min_eigenvalue=min_eig,
        feasible=feasible,
        objective_scale=scale,
    )


#####################################
# Moment form
#####################################


def moment_constraints(Y, G: np.ndarray, Gu: np.ndarray, Gw: np.ndarray, pairwise: bool = True, tag: str = "") -> tuple[list, dict]:
    """Constraints of one moment block; returns (constraints, auxiliary variables)."""
    order = Y.shape[0]
    n_ineq, n_pairs = G.shape[0], Gu.shape[0]
    constraints = [Y[0, 0] == 1]
    aux = {}
    if n_ineq:
        constraints.append(G @ Y[:, 0] >= 0)
        if pairwise:
            W = cp.Variable((order, n_ineq), name=f"W{tag}")
            constraints += [W == Y @ G.T, G @ W >= 0]
            aux[f"W{tag}"] = W
    if n_pairs:
        constraints.append(cp.sum(cp.multiply(Gu @ Y, Gw), axis=1) == 0)
    return constraints, aux


def build_moment_sdp(reduced: ReducedForm, pairwise: bool = True) -> ConicProblem:
    """Single-block moment SDP, the dual of build_reduced_sdp."""
    order = reduced.order
    Y = cp.Variable((order, order), PSD=True, name="Y")
    constraints, aux = moment_constraints(Y, reduced.G, reduced.Gu, reduced.Gw, pairwise)
    problem = cp.Problem(cp.Maximize(cp.sum(cp.multiply(reduced.C, Y))), constraints)
    return ConicProblem(kind="moment", problem=problem, variables={"Y": Y, **aux}, psd_variables=("Y",), meta={"order": order})


def solve_moment(reduced: ReducedForm, solver: Optional[ConicSolver] = None, pairwise: bool = True) -> MomentSolution:
    """Build, solve and extract the candidate of a single moment block."""
    problem = build_moment_sdp(reduced, pairwise)
    result = (solver or CvxpyConicSolver()).submit(problem)
    if not result.usable:
        return MomentSolution(blocks=[], ys=[], status=result.status.value, objective=None, solver=result.solver, solve_time=result.solve_time, matrix_scalars=problem.matrix_scalar_count)
    Y = result.values["Y"]
    return MomentSolution(
        blocks=[Y],
        ys=[extract_candidate(Y)],
        status=result.status.value,
        objective=result.objective,
        solver=result.solver,
        solve_time=result.solve_time,
        matrix_scalars=problem.matrix_scalar_count,
    )
