"""
moment_tools.py - reading results off moment matrices.

A moment block Y approximates [1; y][1; y]^T. When it has rank one the
relaxation is exact and y (lifted back through O y + xbar) solves the QCQP.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field
from typing import Optional, Sequence

# Import external packages
import numpy as np

# Import functions from local modules
from utils.utils_config import get_rank_tol
from utils.utils_errors import DegenerateMomentError, UndefinedRatioError

# Relative distance of Y[0, 0] from 1 accepted when reading a candidate.
LEAD_TOL = 1e-3


@dataclass
class MomentSolution:
    """Moment blocks Y[t, k] (block index t * K + k) and the extracted candidates."""

    blocks: list[np.ndarray]
    ys: list[np.ndarray]
    status: str
    objective: Optional[float]
    solver: str = ""
    solve_time: float = 0.0
    matrix_scalars: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def ranks(self) -> list[int]:
        return [numeric_rank(Y) for Y in self.blocks]

    @property
    def all_rank_one(self) -> bool:
        return all(is_rank_one(Y) for Y in self.blocks)


def extract_candidate(Y: np.ndarray, tol: float = LEAD_TOL) -> np.ndarray:
    """y from the first column of Y, rescaled by the leading entry.

    Solvers return Y[0, 0] = 1 only to their own accuracy; a leading entry
    off by more than tol (relative) or not positive means the block is not
    a moment matrix.
    """
    Y = np.asarray(Y, dtype=float)
    lead = float(Y[0, 0])
    if not (np.isfinite(lead) and lead > 0.0) or abs(lead - 1.0) > tol:
        raise DegenerateMomentError(f"moment block has leading entry {lead}, expected 1")
    return Y[1:, 0] / lead


def singular_values(Y: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(Y, dtype=float), compute_uv=False)


def numeric_rank(Y: np.ndarray, tol: Optional[float] = None) -> int:
    """Number of singular values above tol * sigma_max."""
    tol = get_rank_tol() if tol is None else tol
    s = singular_values(Y)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def is_rank_one(Y: np.ndarray, tol: Optional[float] = None) -> bool:
    """sigma_2 / sigma_1 below tol."""
    tol = get_rank_tol() if tol is None else tol
    s = singular_values(Y)
    if s.size == 0 or s[0] == 0.0:
        return False
    second = s[1] if s.size > 1 else 0.0
    return bool(second / s[0] < tol)


def rank_profile(Y: np.ndarray, count: int = 5) -> list[float]:
    """Leading singular values normalized by the largest."""
    s = singular_values(Y)
    if s.size == 0 or s[0] == 0.0:
        return []
    return [float(v) for v in (s[:count] / s[0])]


def relaxation_gap_pct(bound: float, reference: float) -> float:
    """100 (bound - reference) / reference."""
    if not reference > 0:
        raise UndefinedRatioError(f"relaxation gap is undefined for reference {reference}")
    return 100.0 * (bound - reference) / reference


def duality_gap(primal: float, dual: float) -> float:
    """Relative gap between a moment objective and a certificate bound."""
    return abs(dual - primal) / max(1.0, abs(dual))


def matrix_scalar_count(orders: Sequence[int]) -> int:
    """Scalars in symmetric blocks of the given orders."""
    return sum(d * (d + 1) // 2 for d in orders)
