"""
sdp_full.py - certificate SDP over the full QCQP, equalities kept.

Same terms as the reduced certificate, on S^{n+1} instead of S^{r+1}, plus
one affine multiplier h_m (with constant part h_m0) per equality:

    Ups = Lam E11 - C - sym(e1 (P~^T alpha)^T) - P~^T rho P~
          - sym(U~^T diag(beta) W~) - sym(H V~)   >= 0 (PSD)

where P~ = [p0 | P], V~ = [v0 | V], U~ and W~ are the homogeneous rows and
H is (n+1) x M with free entries.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from typing import Optional

# Import external packages
import cvxpy as cp
import numpy as np

# Import functions from local modules
from qcqp.qcqp_builder import QcqpForm
from relax.conic_contract import ConicProblem, ConicSolver
from relax.sdp_reduced import CertificateSolution, certificate_problem, certificate_terms, solve_certificate, unit_rows
from utils.utils_logger import logger


def _homogeneous(rows: np.ndarray, consts) -> np.ndarray:
    return np.hstack([np.asarray(consts, dtype=float).reshape(-1, 1), rows])


def homogeneous_data(qcqp: QcqpForm) -> dict[str, np.ndarray]:
    n = qcqp.n
    C = np.zeros((n + 1, n + 1))
    C[0, 1:] = qcqp.f
    C[1:, 0] = qcqp.f
    C[1:, 1:] = qcqp.F
    pairs = qcqp.pairs
    return {
        "C": C,
        "P": _homogeneous(qcqp.P, qcqp.p0),
        "V": _homogeneous(qcqp.V, qcqp.v0),
        "U": _homogeneous(np.vstack([p.u for p in pairs]), [p.u0 for p in pairs]) if pairs else np.zeros((0, n + 1)),
        "W": _homogeneous(np.vstack([p.w for p in pairs]), [p.w0 for p in pairs]) if pairs else np.zeros((0, n + 1)),
    }


def build_full_sdp(qcqp: QcqpForm, pairwise: bool = True) -> ConicProblem:
    """Certificate SDP in S^{n+1} with affine multipliers on the equalities."""
    order = qcqp.n + 1
    data = homogeneous_data(qcqp)
    variables, expr, constraints = certificate_terms(order, data["C"], data["P"], data["U"], data["W"], pairwise)
    if qcqp.n_equalities:
        H = cp.Variable((order, qcqp.n_equalities), name="H")
        term = H @ unit_rows(data["V"])
        expr = expr - 0.5 * (term + term.T)
        variables["H"] = H
    logger.debug(f"Full certificate SDP: PSD order {order}, {qcqp.n_equalities} equality multipliers")
    return certificate_problem("full-certificate", order, data["C"], variables, expr, constraints)


def solve_full_sdp(qcqp: QcqpForm, solver: Optional[ConicSolver] = None, pairwise: bool = True) -> CertificateSolution:
    return solve_certificate(build_full_sdp(qcqp, pairwise), solver)
