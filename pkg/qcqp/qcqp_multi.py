"""
qcqp_multi.py - multi-slot, multi-scenario bidding problem.

One QCQP block per (t, k), block index t * K + k. Blocks are tied together by

    ramp         +-(pg_s[t, k] - pg_s[t-1, k]) + ramp_s >= 0    for t >= 1
    bid          bid_s[t, k] - bid_s[t, 0] = 0                   for k >= 1

and the objective is the scenario average sum_{t,k} (1/K) obj_{t,k}.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import math
from dataclasses import dataclass
from typing import Optional, Sequence

# Import external packages
import numpy as np

# Import functions from local modules
from market.market_model import MarketCase
from qcqp.qcqp_builder import QcqpForm, assemble_qcqp
from qcqp.qcqp_reduce import ReducedForm, reduce
from utils.utils_config import get_tolerance
from utils.utils_errors import DimensionMismatchError
from utils.utils_logger import logger


@dataclass(frozen=True)
class RampCoupling:
    """sign * (x[block][pos] - x[prev][pos]) + limit >= 0"""

    block: int
    prev: int
    position: int
    sign: int
    limit: float
    unit: int


@dataclass(frozen=True)
class BidCoupling:
    """x[block][pos] - x[anchor][pos] = 0"""

    block: int
    anchor: int
    position: int
    unit: int


@dataclass(frozen=True, eq=False)
class MultiQcqp:
    horizon: int
    n_scenarios: int
    blocks: tuple[QcqpForm, ...]
    reduced: tuple[ReducedForm, ...]
    weights: tuple[float, ...]
    ramps: tuple[RampCoupling, ...] = ()
    bids: tuple[BidCoupling, ...] = ()
    case: Optional[MarketCase] = None

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_index(self, t: int, k: int) -> int:
        return t * self.n_scenarios + k

    def slot_scenario(self, block: int) -> tuple[int, int]:
        return divmod(block, self.n_scenarios)

    @property
    def n_couplings(self) -> int:
        return len(self.ramps) + len(self.bids)

    def objective(self, xs: Sequence[np.ndarray]) -> float:
        """Scenario-weighted true (bilinear) objective."""
        return float(sum(w * q.objective(x) for w, q, x in zip(self.weights, self.blocks, xs)))

    def lift_all(self, ys: Sequence[np.ndarray]) -> list[np.ndarray]:
        return [red.lift(y) for red, y in zip(self.reduced, ys)]


def _couplings(case: MarketCase, blocks: Sequence[QcqpForm]) -> tuple[list[RampCoupling], list[BidCoupling]]:
    T, K = case.horizon, case.n_scenarios
    layout = blocks[0].layout
    ramps, bids = [], []
    for t in range(1, T):
        for k in range(K):
            b, prev = t * K + k, (t - 1) * K + k
            for s, g in enumerate(layout.strategic):
                limit = case.ramp_limit(g)
                if not math.isfinite(limit):
                    continue
                for sign in (1, -1):
                    ramps.append(RampCoupling(block=b, prev=prev, position=layout.index("pg", g), sign=sign, limit=limit, unit=s))
    for t in range(T):
        for k in range(1, K):
            for s in range(len(layout.strategic)):
                bids.append(BidCoupling(block=t * K + k, anchor=t * K, position=layout.index("bid", s), unit=s))
    return ramps, bids


def assemble_multi(case: MarketCase) -> MultiQcqp:
    """QCQP blocks for every (t, k) of the case plus ramp and bid-consistency couplings."""
    T, K = case.horizon, case.n_scenarios
    blocks = [assemble_qcqp(case, t, k) for t in range(T) for k in range(K)]
    reduced = [reduce(q) for q in blocks]
    ramps, bids = _couplings(case, blocks)
    multi = MultiQcqp(
        horizon=T,
        n_scenarios=K,
        blocks=tuple(blocks),
        reduced=tuple(reduced),
        weights=tuple([case.scenario_weight] * len(blocks)),
        ramps=tuple(ramps),
        bids=tuple(bids),
        case=case,
    )
    logger.info(
        f"Multi QCQP for '{case.name}': T={T}, K={K}, {len(blocks)} blocks, "
        f"{len(ramps)} ramp and {len(bids)} bid-consistency couplings"
    )
    return multi


def multi_from_blocks(blocks: Sequence[QcqpForm], weights: Optional[Sequence[float]] = None) -> MultiQcqp:
    """Wrap standalone QCQPs (one slot, one scenario each) without couplings."""
    weights = tuple(weights) if weights is not None else tuple([1.0] * len(blocks))
    return MultiQcqp(
        horizon=1,
        n_scenarios=len(blocks),
        blocks=tuple(blocks),
        reduced=tuple(reduce(q) for q in blocks),
        weights=weights,
    )


#####################################
# Feasibility of a candidate
#####################################


def coupling_residuals(multi: MultiQcqp, xs: Sequence[np.ndarray]) -> dict[str, float]:
    ramp = 0.0
    for c in multi.ramps:
        value = c.sign * (xs[c.block][c.position] - xs[c.prev][c.position]) + c.limit
        ramp = max(ramp, -value)
    bid = 0.0
    for c in multi.bids:
        bid = max(bid, abs(xs[c.block][c.position] - xs[c.anchor][c.position]))
    return {"ramp": float(ramp), "bid": float(bid)}


def check_multi_feasibility(multi: MultiQcqp, xs: Sequence[np.ndarray]) -> dict[str, float]:
    """Max violation of every constraint family across all blocks; 'max' is the overall figure."""
    if len(xs) != multi.n_blocks:
        raise DimensionMismatchError(f"{len(xs)} vectors for {multi.n_blocks} blocks")
    report = {"inequality": 0.0, "equality": 0.0, "complementarity": 0.0}
    for qcqp, x in zip(multi.blocks, xs):
        for name, value in qcqp.residuals(x).items():
            report[name] = max(report[name], value)
    report.update(coupling_residuals(multi, xs))
    report["max"] = max(report.values())
    return report


def is_multi_feasible(multi: MultiQcqp, xs: Sequence[np.ndarray], tol: Optional[float] = None) -> bool:
    tol = get_tolerance() if tol is None else tol
    return check_multi_feasibility(multi, xs)["max"] < tol
