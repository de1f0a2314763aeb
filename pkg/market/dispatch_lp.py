"""
dispatch_lp.py - the ISO's economic dispatch LP and its duals.

Variables are stacked as [P_G, P_D, theta]. The LP minimizes
a^T P_G - b^T P_D subject to nodal balance, a reference-angle pin,
box limits on P_G and P_D, and flow limits on the lines with finite
capacity. It is solved with HiGHS through scipy.optimize.linprog and
every KKT multiplier is read back from the solver marginals.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass

# Import external packages
import numpy as np
from scipy.optimize import linprog

# Import functions from local modules
from market.market_model import DispatchSolution, MarketCase
from utils.utils_errors import DimensionMismatchError, InfeasibleDispatchError, SolverFailureError
from utils.utils_logger import logger

#####################################
# LP description
#####################################


@dataclass(frozen=True, eq=False)
class DispatchLP:
    """Matrix form of the dispatch LP for one (slot, scenario)."""

    case: MarketCase
    t: int
    k: int
    generator_bids: np.ndarray
    load_bids: np.ndarray
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    bounds: tuple[tuple, ...]

    @property
    def n_gen(self) -> int:
        return len(self.case.generators)

    @property
    def n_load(self) -> int:
        return len(self.case.loads)

    @property
    def n_bus(self) -> int:
        return self.case.network.n_buses

    @property
    def n_limited(self) -> int:
        return len(self.case.network.limited_lines)


def build_dispatch_lp(case: MarketCase, strategic_bids, t: int = 0, k: int = 0) -> DispatchLP:
    """Assemble the dispatch LP at slot t under scenario k for the given strategic offers."""
    bids = np.asarray(strategic_bids, dtype=float).reshape(-1)
    if bids.size != case.generators.n_strategic:
        raise DimensionMismatchError(f"expected {case.generators.n_strategic} strategic bids, got {bids.size}")
    if not np.all(np.isfinite(bids)) or np.any(bids < 0):
        raise ValueError(f"strategic bids must be finite and nonnegative, got {bids}")
    if not 0 <= t < case.horizon:
        raise ValueError(f"slot {t} outside horizon of {case.horizon}")
    if not 0 <= k < case.n_scenarios:
        raise ValueError(f"scenario {k} outside range of {case.n_scenarios}")

    network = case.network
    n_g, n_d, n_b = len(case.generators), len(case.loads), network.n_buses
    a = case.generator_bids(bids, k)
    b = case.load_bids(t, k)

    c = np.concatenate([a, -b, np.zeros(n_b)])

    balance = np.hstack([case.gen_incidence, -case.load_incidence, -network.susceptance_matrix])
    pin = np.zeros((1, n_g + n_d + n_b))
    pin[0, n_g + n_d] = 1.0
    A_eq = np.vstack([balance, pin])
    b_eq = np.zeros(n_b + 1)

    flows = network.limited_flow_matrix
    cap = network.limited_capacity
    lead = np.zeros((flows.shape[0], n_g + n_d))
    A_ub = np.vstack([np.hstack([lead, flows]), np.hstack([lead, -flows])])
    b_ub = np.concatenate([cap, cap])

    bounds = tuple(
        [(lo, hi) for lo, hi in zip(case.generators.p_min, case.generators.p_max)]
        + [(lo, hi) for lo, hi in zip(case.loads.p_min, case.loads.p_max)]
        + [(None, None)] * n_b
    )
    return DispatchLP(
        case=case,
        t=t,
        k=k,
        generator_bids=a,
        load_bids=b,
        c=c,
        A_eq=A_eq,
        b_eq=b_eq,
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=bounds,
    )


def _split_bound_duals(lower, upper, lo, hi) -> tuple[np.ndarray, np.ndarray]:
    """Lower- and upper-bound multipliers, both nonnegative.

    For a fixed variable (lo == hi) HiGHS may report the whole reduced cost on
    either side, so it is split by sign instead.
    """
    reduced = lower + upper
    fixed = np.isclose(lo, hi)
    below = np.where(fixed, np.maximum(reduced, 0.0), np.maximum(lower, 0.0))
    above = np.where(fixed, np.maximum(-reduced, 0.0), np.maximum(-upper, 0.0))
    return below, above


def solve_dispatch(lp: DispatchLP) -> DispatchSolution:
    """Solve the LP with HiGHS and return primal values plus every multiplier."""
    has_ub = lp.A_ub.shape[0] > 0
    res = linprog(
        lp.c,
        A_ub=lp.A_ub if has_ub else None,
        b_ub=lp.b_ub if has_ub else None,
        A_eq=lp.A_eq,
        b_eq=lp.b_eq,
        bounds=list(lp.bounds),
        method="highs",
    )
    if res.status == 2:
        logger.error(f"Dispatch LP infeasible for case '{lp.case.name}' (t={lp.t}, k={lp.k})")
        raise InfeasibleDispatchError(f"dispatch infeasible at t={lp.t}, k={lp.k}: {res.message}")
    if res.status != 0:
        logger.error(f"Dispatch LP failed with status {res.status}: {res.message}")
        raise SolverFailureError(f"dispatch LP status {res.status}: {res.message}")

    n_g, n_d, n_b, n_l = lp.n_gen, lp.n_load, lp.n_bus, lp.n_limited
    x = res.x
    lower = res.lower.marginals
    upper = res.upper.marginals
    if has_ub:
        ineq = res.ineqlin.marginals
        psi = -ineq[:n_l]
        phi = -ineq[n_l:]
    else:
        psi = np.zeros(0)
        phi = np.zeros(0)

    sigma, delta = _split_bound_duals(lower[:n_g], upper[:n_g], lp.case.generators.p_min, lp.case.generators.p_max)
    zeta, xi = _split_bound_duals(lower[n_g:n_g + n_d], upper[n_g:n_g + n_d], lp.case.loads.p_min, lp.case.loads.p_max)

    sol = DispatchSolution(
        p_g=x[:n_g].copy(),
        p_d=x[n_g:n_g + n_d].copy(),
        theta=x[n_g + n_d:].copy(),
        lam=res.eqlin.marginals[:n_b].copy(),
        sigma=sigma,
        delta=delta,
        zeta=zeta,
        xi=xi,
        phi=np.maximum(phi, 0.0),
        psi=np.maximum(psi, 0.0),
        objective=float(res.fun),
        t=lp.t,
        k=lp.k,
    )
    logger.debug(f"Dispatch t={lp.t} k={lp.k}: objective {sol.objective:.6f}, LMP range [{sol.lam.min():.4f}, {sol.lam.max():.4f}]")
    return sol


def dispatch(case: MarketCase, strategic_bids, t: int = 0, k: int = 0) -> DispatchSolution:
    """Build and solve in one call."""
    return solve_dispatch(build_dispatch_lp(case, strategic_bids, t, k))
