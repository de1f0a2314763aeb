"""
kkt_check.py - KKT residuals of a dispatch solution and profit accounting.

Stationarity
    a - B_G^T lam - sigma + delta = 0
    b - B_D^T lam + zeta - xi = 0
    A V^-1 A^T lam + A_f V_f^-1 (psi - phi) = 0      (A_f: limited lines only)
Complementarity pairs (slack, multiplier)
    (P_G - P_G_min, sigma)   (P_G_max - P_G, delta)
    (P_D - P_D_min, zeta)    (P_D_max - P_D, xi)
    (F theta + C, phi)       (C - F theta, psi)
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field

# Import external packages
import numpy as np

# Import functions from local modules
from market.market_model import DispatchSolution, MarketCase
from utils.utils_errors import DimensionMismatchError, UndefinedRatioError

#####################################
# Residual report
#####################################


def _inf_norm(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def _negative_part(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(np.maximum(-v, 0.0))) if v.size else 0.0


@dataclass
class KktResiduals:
    """Max-norm residual of each KKT family."""

    gen_stationarity: float
    load_stationarity: float
    angle_stationarity: float
    balance: float
    reference_angle: float
    primal_bounds: float
    flow_limits: float
    sign: float
    complementarity: dict[str, float] = field(default_factory=dict)

    @property
    def stationarity(self) -> float:
        return max(self.gen_stationarity, self.load_stationarity, self.angle_stationarity)

    @property
    def feasibility(self) -> float:
        return max(self.balance, self.reference_angle, self.primal_bounds, self.flow_limits)

    @property
    def max_complementarity(self) -> float:
        return max(self.complementarity.values(), default=0.0)

    @property
    def max_residual(self) -> float:
        return max(self.stationarity, self.feasibility, self.sign, self.max_complementarity)

    def as_dict(self) -> dict[str, float]:
        out = {
            "gen_stationarity": self.gen_stationarity,
            "load_stationarity": self.load_stationarity,
            "angle_stationarity": self.angle_stationarity,
            "balance": self.balance,
            "reference_angle": self.reference_angle,
            "primal_bounds": self.primal_bounds,
            "flow_limits": self.flow_limits,
            "sign": self.sign,
        }
        out.update({f"complementarity_{name}": value for name, value in self.complementarity.items()})
        out["max"] = self.max_residual
        return out


def _check_dimensions(case: MarketCase, sol: DispatchSolution, strategic_bids: np.ndarray) -> None:
    expected = {
        "p_g": len(case.generators),
        "p_d": len(case.loads),
        "theta": case.network.n_buses,
        "lam": case.network.n_buses,
        "sigma": len(case.generators),
        "delta": len(case.generators),
        "zeta": len(case.loads),
        "xi": len(case.loads),
        "phi": len(case.network.limited_lines),
        "psi": len(case.network.limited_lines),
    }
    for name, size in expected.items():
        got = np.asarray(getattr(sol, name)).size
        if got != size:
            raise DimensionMismatchError(f"{name} has length {got}, case needs {size}")
    if strategic_bids.size != case.generators.n_strategic:
        raise DimensionMismatchError(f"expected {case.generators.n_strategic} strategic bids, got {strategic_bids.size}")


def kkt_residuals(case: MarketCase, strategic_bids, sol: DispatchSolution) -> KktResiduals:
    """Evaluate every KKT family of the dispatch LP at sol (slot sol.t, scenario sol.k)."""
    bids = np.asarray(strategic_bids, dtype=float).reshape(-1)
    _check_dimensions(case, sol, bids)
    network = case.network
    a = case.generator_bids(bids, sol.k)
    b = case.load_bids(sol.t, sol.k)
    flows_f = network.limited_flow_matrix
    cap = network.limited_capacity
    gen, loads = case.generators, case.loads

    gen_stat = a - case.gen_incidence.T @ sol.lam - sol.sigma + sol.delta
    load_stat = b - case.load_incidence.T @ sol.lam + sol.zeta - sol.xi
    angle_stat = network.susceptance_matrix @ sol.lam + flows_f.T @ (sol.psi - sol.phi)
    balance = case.gen_incidence @ sol.p_g - case.load_incidence @ sol.p_d - network.susceptance_matrix @ sol.theta

    flow = flows_f @ sol.theta
    slacks = {
        "gen_lower": (sol.p_g - gen.p_min, sol.sigma),
        "gen_upper": (gen.p_max - sol.p_g, sol.delta),
        "load_lower": (sol.p_d - loads.p_min, sol.zeta),
        "load_upper": (loads.p_max - sol.p_d, sol.xi),
        "flow_lower": (flow + cap, sol.phi),
        "flow_upper": (cap - flow, sol.psi),
    }
    primal_bounds = max(_negative_part(slacks[name][0]) for name in ("gen_lower", "gen_upper", "load_lower", "load_upper"))
    flow_limits = max(_negative_part(slacks[name][0]) for name in ("flow_lower", "flow_upper"))
    sign = max(_negative_part(mult) for _, mult in slacks.values())
    complementarity = {name: _inf_norm(slack * mult) for name, (slack, mult) in slacks.items()}

    return KktResiduals(
        gen_stationarity=_inf_norm(gen_stat),
        load_stationarity=_inf_norm(load_stat),
        angle_stationarity=_inf_norm(angle_stat),
        balance=_inf_norm(balance),
        reference_angle=abs(float(sol.theta[0])) if sol.theta.size else 0.0,
        primal_bounds=primal_bounds,
        flow_limits=flow_limits,
        sign=sign,
        complementarity=complementarity,
    )


#####################################
# Objective values
#####################################


def primal_objective(case: MarketCase, strategic_bids, sol: DispatchSolution) -> float:
    a = case.generator_bids(np.asarray(strategic_bids, dtype=float).reshape(-1), sol.k)
    b = case.load_bids(sol.t, sol.k)
    return float(a @ sol.p_g - b @ sol.p_d)


def dual_objective(case: MarketCase, sol: DispatchSolution) -> float:
    """Dual value of the dispatch LP; equals the primal optimum by LP strong duality."""
    gen, loads = case.generators, case.loads
    cap = case.network.limited_capacity
    return float(
        sol.sigma @ gen.p_min
        - sol.delta @ gen.p_max
        + sol.zeta @ loads.p_min
        - sol.xi @ loads.p_max
        - cap @ (sol.phi + sol.psi)
    )


def strategic_profit(case: MarketCase, sol: DispatchSolution, strategic_bids=None) -> float:
    """Revenue at the local LMP minus production cost, strategic units only."""
    gen = case.generators
    if strategic_bids is not None and np.asarray(strategic_bids).size != gen.n_strategic:
        raise DimensionMismatchError(f"expected {gen.n_strategic} strategic bids, got {np.asarray(strategic_bids).size}")
    if not gen.n_strategic:
        return 0.0
    idx = list(gen.strategic_indices)
    lmp = (case.gen_incidence.T @ sol.lam)[idx]
    return float((lmp - gen.strategic_costs) @ sol.p_g[idx])


def compute_optimality(candidate_profit: float, reference_profit: float) -> float:
    """Candidate profit as a fraction of the reference optimum."""
    if not reference_profit > 0:
        raise UndefinedRatioError(f"optimality is undefined for reference profit {reference_profit}")
    return float(candidate_profit) / float(reference_profit)
