"""
sdp_multi.py - one conic problem for every (slot, scenario) block.

Each block b gets its own moment matrix Y_b in S^{r_b + 1} with the
single-block constraints, and a vector y_b tied to its first column. The
ramp and bid-consistency couplings are linear in the lifted vectors
x_b = O_b y_b + xbar_b. The objective is sum_b w_b <C_b, Y_b>.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from typing import Optional

# Import external packages
import cvxpy as cp

# Import functions from local modules
from qcqp.qcqp_multi import MultiQcqp
from relax.conic_contract import ConicProblem, ConicSolver, CvxpyConicSolver
from relax.moment_tools import MomentSolution, extract_candidate
from relax.sdp_reduced import moment_constraints
from utils.utils_logger import logger


def build_multi_sdp(multi: MultiQcqp, pairwise: bool = True) -> ConicProblem:
    blocks, ys, constraints, variables = [], [], [], {}
    objective = 0
    for b, red in enumerate(multi.reduced):
        Y = cp.Variable((red.order, red.order), PSD=True, name=f"Y{b}")
        y = cp.Variable(red.r, name=f"y{b}") if red.r else None
        block_constraints, aux = moment_constraints(Y, red.G, red.Gu, red.Gw, pairwise, tag=str(b))
        constraints += block_constraints
        if y is not None:
            constraints.append(y == Y[1:, 0])
            variables[f"y{b}"] = y
        objective = objective + multi.weights[b] * cp.sum(cp.multiply(red.C, Y))
        blocks.append(Y)
        ys.append(y)
        variables[f"Y{b}"] = Y
        variables.update(aux)

    def lifted(b: int, position: int):
        red = multi.reduced[b]
        if ys[b] is None:
            return red.xbar[position]
        return red.O[position] @ ys[b] + red.xbar[position]

    def free(*blocks: int) -> bool:
        return any(ys[b] is not None for b in blocks)

    for c in multi.ramps:
        if free(c.block, c.prev):
            constraints.append(c.sign * (lifted(c.block, c.position) - lifted(c.prev, c.position)) + c.limit >= 0)
    for c in multi.bids:
        if free(c.block, c.anchor):
            constraints.append(lifted(c.block, c.position) == lifted(c.anchor, c.position))

    problem = cp.Problem(cp.Maximize(objective), constraints)
    names = tuple(f"Y{b}" for b in range(multi.n_blocks))
    logger.debug(f"Multi moment SDP: {multi.n_blocks} blocks of order {[r.order for r in multi.reduced]}, {multi.n_couplings} couplings")
    return ConicProblem(kind="multi-moment", problem=problem, variables=variables, psd_variables=names, meta={"blocks": multi.n_blocks})


def solve_multi_sdp(multi: MultiQcqp, solver: Optional[ConicSolver] = None, pairwise: bool = True) -> MomentSolution:
    """Solve the coupled moment problem and extract y for every block."""
    problem = build_multi_sdp(multi, pairwise)
    result = (solver or CvxpyConicSolver()).submit(problem)
    if not result.usable:
        logger.warning(f"Multi moment SDP ended with status {result.status.value}")
        return MomentSolution(
            blocks=[],
            ys=[],
            status=result.status.value,
            objective=None,
            solver=result.solver,
            solve_time=result.solve_time,
            matrix_scalars=problem.matrix_scalar_count,
        )
    Ys = [result.values[f"Y{b}"] for b in range(multi.n_blocks)]
    return MomentSolution(
        blocks=Ys,
        ys=[extract_candidate(Y) for Y in Ys],
        status=result.status.value,
        objective=result.objective,
        solver=result.solver,
        solve_time=result.solve_time,
        matrix_scalars=problem.matrix_scalar_count,
    )
