"""
qcqp_builder.py - the strategic bidding MPEC as a QCQP in one stacked vector.

    maximize    x^T F x + 2 f^T x
    subject to  p_i^T x + p_i0 >= 0        (bounds, flow limits, dual signs, bid range)
                v_m^T x + v_m0  = 0        (balance, reference angle, stationarity)
                (u_z^T x + u_z0)(w_z^T x + w_z0) = 0   (complementary slackness)

Each complementarity is kept as its two affine factors. The first factor is
the primal slack, the second the bare multiplier (w_z0 = 0). The quadratic
data Q_z, q_z, d_z are derived from the factors on demand.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field
from typing import Optional

# Import external packages
import numpy as np

# Import functions from local modules
from market.market_model import DispatchSolution, MarketCase
from qcqp.layout import DUAL_SEGMENTS, VariableLayout
from utils.utils_errors import DimensionMismatchError
from utils.utils_logger import logger

#####################################
# Complementarity pairs
#####################################

# family -> (primal segment, multiplier segment)
PAIR_FAMILIES: dict[str, tuple[str, str]] = {
    "gen_lower": ("pg", "sigma"),
    "gen_upper": ("pg", "delta"),
    "load_lower": ("pd", "zeta"),
    "load_upper": ("pd", "xi"),
    "flow_lower": ("theta", "phi"),
    "flow_upper": ("theta", "psi"),
}


@dataclass(frozen=True, eq=False)
class ComplementarityPair:
    """(u^T x + u0) (w^T x + w0) = 0 with the slack first and the multiplier second."""

    family: str
    element: int
    u: np.ndarray
    u0: float
    w: np.ndarray
    w0: float = 0.0

    @property
    def name(self) -> str:
        return f"{self.family}[{self.element}]"

    @property
    def Q(self) -> np.ndarray:
        """Outer-product form u w^T."""
        return np.outer(self.u, self.w)

    @property
    def Q_sym(self) -> np.ndarray:
        Q = self.Q
        return 0.5 * (Q + Q.T)

    @property
    def q(self) -> np.ndarray:
        return 0.5 * (self.u0 * self.w + self.w0 * self.u)

    @property
    def constant(self) -> float:
        return self.u0 * self.w0

    @property
    def d(self) -> Optional[np.ndarray]:
        """Scaled slack direction with Q = d q^T; undefined when the slack has no offset."""
        if self.u0 == 0.0 or self.w0 != 0.0:
            return None
        return 2.0 * self.u / self.u0

    def slack(self, x: np.ndarray) -> float:
        return float(self.u @ x + self.u0)

    def multiplier(self, x: np.ndarray) -> float:
        return float(self.w @ x + self.w0)

    def product(self, x: np.ndarray) -> float:
        return self.slack(x) * self.multiplier(x)

    def quadratic(self, x: np.ndarray) -> float:
        """x^T Q x + 2 q^T x + u0 w0; identical to product()."""
        return float(x @ self.Q @ x + 2.0 * self.q @ x + self.constant)


#####################################
# QCQP form
#####################################


@dataclass(frozen=True, eq=False)
class QcqpForm:
    F: np.ndarray
    f: np.ndarray
    P: np.ndarray
    p0: np.ndarray
    V: np.ndarray
    v0: np.ndarray
    pairs: tuple[ComplementarityPair, ...] = ()
    layout: Optional[VariableLayout] = None
    inequality_labels: tuple[str, ...] = ()
    equality_labels: tuple[str, ...] = ()
    linear_objective: Optional[np.ndarray] = None
    linear_constant: float = 0.0
    t: int = 0
    k: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def n_inequalities(self) -> int:
        return self.P.shape[0]

    @property
    def n_equalities(self) -> int:
        return self.V.shape[0]

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n:
            raise DimensionMismatchError(f"vector of length {x.size} for a QCQP in {self.n} variables")
        return x

    def objective(self, x: np.ndarray) -> float:
        x = self._check(x)
        return float(x @ self.F @ x + 2.0 * self.f @ x)

    def linear_objective_value(self, x: np.ndarray) -> float:
        if self.linear_objective is None:
            raise ValueError("this QCQP carries no linearized objective")
        return float(self.linear_objective @ self._check(x) + self.linear_constant)

    def inequality_values(self, x: np.ndarray) -> np.ndarray:
        return self.P @ self._check(x) + self.p0

    def equality_values(self, x: np.ndarray) -> np.ndarray:
        return self.V @ self._check(x) + self.v0

    def complementarity_values(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        return np.array([pair.product(x) for pair in self.pairs])

    def residuals(self, x: np.ndarray) -> dict[str, float]:
        """Max violation of each constraint family."""
        ineq = self.inequality_values(x)
        eq = self.equality_values(x)
        comp = self.complementarity_values(x)
        return {
            "inequality": float(np.max(np.maximum(-ineq, 0.0))) if ineq.size else 0.0,
            "equality": float(np.max(np.abs(eq))) if eq.size else 0.0,
            "complementarity": float(np.max(np.abs(comp))) if comp.size else 0.0,
        }

    def max_residual(self, x: np.ndarray) -> float:
        return max(self.residuals(x).values())


#####################################
# Assembly
#####################################


class _Rows:
    """Accumulates affine rows a^T x + a0 with labels."""

    def __init__(self, n: int):
        self.n = n
        self.rows: list[np.ndarray] = []
        self.consts: list[float] = []
        self.labels: list[str] = []

    def add(self, row: np.ndarray, const: float, label: str) -> None:
        self.rows.append(row)
        self.consts.append(float(const))
        self.labels.append(label)

    def matrix(self) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
        if not self.rows:
            return np.zeros((0, self.n)), np.zeros(0), ()
        return np.vstack(self.rows), np.array(self.consts), tuple(self.labels)


def _slack_factors(case: MarketCase, layout: VariableLayout) -> list[tuple[str, int, np.ndarray, float]]:
    """(family, element, u, u0) for every primal slack of the dispatch LP."""
    n = layout.n
    gen, loads = case.generators, case.loads
    flows_f = case.network.limited_flow_matrix
    cap = case.network.limited_capacity
    out = []
    for g in range(len(gen)):
        out.append(("gen_lower", g, layout.basis("pg", g), -gen.p_min[g]))
    for g in range(len(gen)):
        out.append(("gen_upper", g, -layout.basis("pg", g), gen.p_max[g]))
    for d in range(len(loads)):
        out.append(("load_lower", d, layout.basis("pd", d), -loads.p_min[d]))
    for d in range(len(loads)):
        out.append(("load_upper", d, -layout.basis("pd", d), loads.p_max[d]))
    for l in range(flows_f.shape[0]):
        u = np.zeros(n)
        u[layout.slice("theta")] = flows_f[l]
        out.append(("flow_lower", l, u, cap[l]))
    for l in range(flows_f.shape[0]):
        u = np.zeros(n)
        u[layout.slice("theta")] = -flows_f[l]
        out.append(("flow_upper", l, u, cap[l]))
    return out


def assemble_qcqp(case: MarketCase, t: int = 0, k: int = 0) -> QcqpForm:
    """Write the bidding MPEC at slot t, scenario k as a QCQP."""
    layout = VariableLayout.for_case(case)
    n = layout.n
    network = case.network
    gen, loads = case.generators, case.loads
    strategic = gen.strategic_indices
    a_fixed = case.nonstrategic_bids(k)
    b = case.load_bids(t, k)
    cap = case.bid_cap()

    # objective: lam_bus(s) * pg_s - c_s * pg_s
    F = np.zeros((n, n))
    f = np.zeros(n)
    for s, g in enumerate(strategic):
        i = layout.index("lam", network.bus_index(gen.generators[g].bus))
        j = layout.index("pg", g)
        F[i, j] += 0.5
        F[j, i] += 0.5
        f[j] = -0.5 * gen.strategic_costs[s]

    # inequalities
    ineq = _Rows(n)
    for s in range(len(strategic)):
        ineq.add(layout.basis("bid", s), 0.0, f"bid_lower[{s}]")
    for s in range(len(strategic)):
        ineq.add(-layout.basis("bid", s), cap, f"bid_upper[{s}]")
    slacks = _slack_factors(case, layout)
    for family, element, u, u0 in slacks:
        ineq.add(u, u0, f"{family}[{element}]")
    for name in DUAL_SEGMENTS:
        for element in range(layout.size(name)):
            ineq.add(layout.basis(name, element), 0.0, f"{name}>=0[{element}]")

    # equalities
    eq = _Rows(n)
    B_G, B_D = case.gen_incidence, case.load_incidence
    L = network.susceptance_matrix
    flows_f = network.limited_flow_matrix
    for i in range(network.n_buses):
        row = np.zeros(n)
        row[layout.slice("pg")] = B_G[i]
        row[layout.slice("pd")] = -B_D[i]
        row[layout.slice("theta")] = -L[i]
        eq.add(row, 0.0, f"balance[{network.node_ids[i]}]")
    eq.add(layout.basis("theta", 0), 0.0, "reference_angle")
    for g in range(len(gen)):
        row = -layout.basis("lam", network.bus_index(gen.generators[g].bus)) - layout.basis("sigma", g) + layout.basis("delta", g)
        if g in strategic:
            row = row + layout.basis("bid", strategic.index(g))
            const = 0.0
        else:
            const = a_fixed[g]
        eq.add(row, const, f"gen_stationarity[{g}]")
    for d in range(len(loads)):
        row = -layout.basis("lam", network.bus_index(loads.loads[d].bus)) + layout.basis("zeta", d) - layout.basis("xi", d)
        eq.add(row, b[d], f"load_stationarity[{d}]")
    for i in range(network.n_buses):
        row = np.zeros(n)
        row[layout.slice("lam")] = L[i]
        row[layout.slice("psi")] = flows_f[:, i]
        row[layout.slice("phi")] = -flows_f[:, i]
        eq.add(row, 0.0, f"angle_stationarity[{network.node_ids[i]}]")

    # complementarity: slack first, bare multiplier second
    pairs = []
    for family, element, u, u0 in slacks:
        dual_segment = PAIR_FAMILIES[family][1]
        pairs.append(ComplementarityPair(family=family, element=element, u=u, u0=float(u0), w=layout.basis(dual_segment, element)))

    P, p0, ineq_labels = ineq.matrix()
    V, v0, eq_labels = eq.matrix()
    c_lin = linearized_objective(case, layout, t, k)

    qcqp = QcqpForm(
        F=F,
        f=f,
        P=P,
        p0=p0,
        V=V,
        v0=v0,
        pairs=tuple(pairs),
        layout=layout,
        inequality_labels=ineq_labels,
        equality_labels=eq_labels,
        linear_objective=c_lin,
        linear_constant=0.0,
        t=t,
        k=k,
        notes={"bid_cap": cap},
    )
    logger.debug(
        f"QCQP t={t} k={k}: n={qcqp.n}, {qcqp.n_inequalities} inequalities, "
        f"{qcqp.n_equalities} equalities, {qcqp.n_pairs} complementarities"
    )
    return qcqp


def linearized_objective(case: MarketCase, layout: VariableLayout, t: int = 0, k: int = 0) -> np.ndarray:
    """Linear expression equal to the strategic profit at every KKT point.

    Strong duality of the dispatch LP together with the complementarity of the
    strategic units removes the bilinear revenue term:

        sum_{g not in S} (sigma_g Pmin_g - delta_g Pmax_g - a_g P_g)
        + zeta^T Pmin_D - xi^T Pmax_D - C^T (phi + psi) + b^T P_D - c^T P_S
    """
    gen, loads = case.generators, case.loads
    a = case.nonstrategic_bids(k)
    b = case.load_bids(t, k)
    c = np.zeros(layout.n)
    for g in gen.nonstrategic_indices:
        c[layout.index("sigma", g)] = gen.p_min[g]
        c[layout.index("delta", g)] = -gen.p_max[g]
        c[layout.index("pg", g)] = -a[g]
    for s, g in enumerate(gen.strategic_indices):
        c[layout.index("pg", g)] = -gen.strategic_costs[s]
    c[layout.slice("zeta")] = loads.p_min
    c[layout.slice("xi")] = -loads.p_max
    c[layout.slice("pd")] = b
    cap = case.network.limited_capacity
    c[layout.slice("phi")] = -cap
    c[layout.slice("psi")] = -cap
    return c


def stack_solution(case: MarketCase, sol: DispatchSolution, strategic_bids, layout: Optional[VariableLayout] = None) -> np.ndarray:
    """Stack bids, dispatch and multipliers into the QCQP vector."""
    layout = layout or VariableLayout.for_case(case)
    return layout.stack(
        {
            "bid": np.asarray(strategic_bids, dtype=float),
            "pg": sol.p_g,
            "pd": sol.p_d,
            "lam": sol.lam,
            "sigma": sol.sigma,
            "delta": sol.delta,
            "zeta": sol.zeta,
            "xi": sol.xi,
            "phi": sol.phi,
            "psi": sol.psi,
            "theta": sol.theta,
        }
    )
