"""
oracle.py - brute-force bidding oracle for desk-size cases.

Every combination of grid bids (one grid per strategic unit and slot) is
dispatched through the ISO's LP for every scenario. The profit of a
combination is the sum over slots of the scenario-averaged profit.
Combinations whose strategic outputs break a ramp limit are skipped.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

# Import external packages
import numpy as np

# Import functions from local modules
from market.dispatch_lp import dispatch
from market.kkt_check import strategic_profit
from market.market_model import MarketCase
from utils.utils_config import get_oracle_budget
from utils.utils_errors import InfeasibleDispatchError, OracleBudgetError
from utils.utils_logger import logger


@dataclass
class OracleResult:
    profit: float
    bids: np.ndarray  # T x S
    evaluated: int
    skipped: int
    step: float
    tolerance: float
    solve_time: float = 0.0
    grid_sizes: list[int] = field(default_factory=list)


def default_bid_grid(case: MarketCase, step: float = 0.01) -> list[np.ndarray]:
    """Per strategic unit: cost, cost + step, ... up to the bid cap."""
    if not step > 0:
        raise OracleBudgetError(f"grid step must be positive, got {step}")
    cap = case.bid_cap()
    grids = []
    for cost in case.generators.strategic_costs:
        lo = min(float(cost), cap)
        n = int(math.floor((cap - lo) / step + 1e-9)) + 1
        grids.append(np.round(lo + step * np.arange(n), 10))
    return grids


def _slot_profits(case: MarketCase, bids: np.ndarray, t: int) -> tuple[float, list[np.ndarray]]:
    """Scenario-averaged profit at slot t and the strategic output of every scenario."""
    idx = list(case.generators.strategic_indices)
    total, outputs = 0.0, []
    for k in range(case.n_scenarios):
        sol = dispatch(case, bids, t, k)
        total += case.scenario_weight * strategic_profit(case, sol)
        outputs.append(sol.p_g[idx])
    return total, outputs


def _ramp_ok(case: MarketCase, prev: list[np.ndarray], cur: list[np.ndarray]) -> bool:
    limits = np.array([case.ramp_limit(g) for g in case.generators.strategic_indices])
    return all(np.all(np.abs(c - p) <= limits + 1e-9) for p, c in zip(prev, cur))


def brute_force_oracle(
    case: MarketCase,
    grids: Optional[Sequence[np.ndarray]] = None,
    step: float = 0.01,
    budget: Optional[int] = None,
) -> OracleResult:
    """Best expected profit over the bid grid, for the case's own horizon and scenarios."""
    grids = list(grids) if grids is not None else default_bid_grid(case, step)
    budget = get_oracle_budget() if budget is None else budget
    T = case.horizon
    S = case.generators.n_strategic
    if len(grids) != S:
        raise OracleBudgetError(f"{len(grids)} grids for {S} strategic units")
    sizes = [len(g) for g in grids]
    if S == 0 or any(s == 0 for s in sizes):
        raise OracleBudgetError("bid grid is empty")
    combos = math.prod(sizes) ** T
    if combos > budget:
        logger.error(f"Oracle grid has {combos} combinations, budget is {budget}")
        raise OracleBudgetError(f"{combos} bid combinations exceed the budget of {budget}")

    logger.info(f"Oracle on '{case.name}': {combos} combinations, T={T}, K={case.n_scenarios}")
    start = time.perf_counter()
    slot_bids = [np.array(c, dtype=float) for c in itertools.product(*grids)]
    # per-slot results are independent of the other slots; cache them
    cache: dict[tuple[int, int], Optional[tuple[float, list[np.ndarray]]]] = {}

    def slot(t: int, i: int):
        key = (t, i)
        if key not in cache:
            try:
                cache[key] = _slot_profits(case, slot_bids[i], t)
            except InfeasibleDispatchError:
                cache[key] = None
        return cache[key]

    best_profit, best_path, skipped = -np.inf, None, 0
    for path in itertools.product(range(len(slot_bids)), repeat=T):
        results = [slot(t, i) for t, i in enumerate(path)]
        if any(r is None for r in results):
            skipped += 1
            continue
        if any(not _ramp_ok(case, results[t - 1][1], results[t][1]) for t in range(1, T)):
            skipped += 1
            continue
        profit = sum(r[0] for r in results)
        if profit > best_profit + 1e-12:
            best_profit, best_path = profit, path
    elapsed = time.perf_counter() - start
    if best_path is None:
        raise OracleBudgetError("no bid combination on the grid gives a feasible, ramp-compliant dispatch")

    tolerance = step * float(np.sum(case.generators.p_max[list(case.generators.strategic_indices)])) * T
    bids = np.vstack([slot_bids[i] for i in best_path])
    logger.info(f"Oracle best profit {best_profit:.6f} at bids {bids.tolist()} ({elapsed:.2f}s)")
    return OracleResult(
        profit=float(best_profit),
        bids=bids,
        evaluated=combos - skipped,
        skipped=skipped,
        step=step,
        tolerance=tolerance,
        solve_time=elapsed,
        grid_sizes=sizes,
    )
