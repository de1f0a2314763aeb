"""
qcqp_reduce.py - eliminate the linear equalities of a QCQP.

Every x with V x + v0 = 0 is written x = O y + xbar, where the columns of O
are an orthonormal basis of Null(V) and xbar is the minimum-norm solution of
V x = -v0. In homogeneous coordinates [1; x] = Omega [1; y] with

    Omega = [[1, 0], [xbar, O]]

and every remaining constraint and the objective are pulled back through
Omega, leaving a QCQP in r = n - rank(V) variables with no equalities.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass
from typing import Optional

# Import external packages
import numpy as np
import scipy.linalg

# Import functions from local modules
from qcqp.qcqp_builder import QcqpForm
from utils.utils_config import get_svd_cutoff
from utils.utils_errors import DimensionMismatchError, InconsistentEqualitiesError
from utils.utils_logger import logger


@dataclass(frozen=True, eq=False)
class ReducedForm:
    parent: QcqpForm
    O: np.ndarray
    xbar: np.ndarray
    Omega: np.ndarray
    C: np.ndarray  # Omega^T [[0, f^T], [f, F]] Omega, objective = [1;y]^T C [1;y]
    G: np.ndarray  # inequality rows in homogeneous y coordinates
    Gu: np.ndarray  # slack factors of the complementarity pairs
    Gw: np.ndarray  # multiplier factors of the complementarity pairs

    @property
    def r(self) -> int:
        return self.O.shape[1]

    @property
    def n(self) -> int:
        return self.O.shape[0]

    @property
    def order(self) -> int:
        """Order of the lifted PSD block."""
        return self.r + 1

    def lift(self, y: np.ndarray) -> np.ndarray:
        return lift(self, y)

    def project(self, x: np.ndarray) -> np.ndarray:
        """y = O^T (x - xbar), exact for equality-feasible x."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n:
            raise DimensionMismatchError(f"vector of length {x.size}, parent QCQP has {self.n} variables")
        return self.O.T @ (x - self.xbar)

    def objective(self, y: np.ndarray) -> float:
        z = np.concatenate([[1.0], np.asarray(y, dtype=float).reshape(-1)])
        return float(z @ self.C @ z)


def _homogeneous(rows: np.ndarray, consts: np.ndarray) -> np.ndarray:
    """[const | row] for each affine row."""
    return np.hstack([np.asarray(consts, dtype=float).reshape(-1, 1), rows])


def reduce(qcqp: QcqpForm, cutoff: Optional[float] = None) -> ReducedForm:
    """Null-space reduction of a QCQP."""
    cutoff = get_svd_cutoff() if cutoff is None else cutoff
    n = qcqp.n

    if qcqp.n_equalities == 0:
        O = np.eye(n)
        xbar = np.zeros(n)
    else:
        O = scipy.linalg.null_space(qcqp.V, rcond=cutoff)
        xbar, _, _, _ = scipy.linalg.lstsq(qcqp.V, -qcqp.v0)
        residual = float(np.max(np.abs(qcqp.V @ xbar + qcqp.v0)))
        scale = max(1.0, float(np.max(np.abs(qcqp.v0))))
        if residual > 1e-9 * scale:
            logger.error(f"Equality system inconsistent: residual {residual:.3e}")
            raise InconsistentEqualitiesError(f"linear equalities have no solution (residual {residual:.3e})")

    r = O.shape[1]
    Omega = np.zeros((n + 1, r + 1))
    Omega[0, 0] = 1.0
    Omega[1:, 0] = xbar
    Omega[1:, 1:] = O

    obj = np.zeros((n + 1, n + 1))
    obj[0, 1:] = qcqp.f
    obj[1:, 0] = qcqp.f
    obj[1:, 1:] = qcqp.F
    C = Omega.T @ obj @ Omega
    C = 0.5 * (C + C.T)

    G = _homogeneous(qcqp.P, qcqp.p0) @ Omega
    if qcqp.pairs:
        Gu = _homogeneous(np.vstack([p.u for p in qcqp.pairs]), [p.u0 for p in qcqp.pairs]) @ Omega
        Gw = _homogeneous(np.vstack([p.w for p in qcqp.pairs]), [p.w0 for p in qcqp.pairs]) @ Omega
    else:
        Gu = np.zeros((0, r + 1))
        Gw = np.zeros((0, r + 1))

    logger.info(f"Reduced QCQP from n={n} to r={r} ({qcqp.n_equalities} equalities, rank {n - r})")
    return ReducedForm(parent=qcqp, O=O, xbar=xbar, Omega=Omega, C=C, G=G, Gu=Gu, Gw=Gw)


def lift(reduced: ReducedForm, y: np.ndarray) -> np.ndarray:
    """x = O y + xbar."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != reduced.r:
        raise DimensionMismatchError(f"reduced vector of length {y.size}, expected {reduced.r}")
    return reduced.O @ y + reduced.xbar
