"""
milp_reform.py - big-M mixed-integer form of the bidding MPEC.

Continuous columns are the stacked QCQP vectors of every block (block b at
offsets[b]), followed by one binary per complementarity pair that is kept
as a disjunction. A kept pair z with binary beta reads

    0 <= dual_z  <= M_dual   * beta
    0 <= slack_z <= M_primal * (1 - beta)

A pair fixed by the recovery loop gets one equality instead: slack_z = 0
(fix-primal-slack) or dual_z = 0 (fix-dual-factor). The objective is the
strong-duality linearization carried by each block, weighted by scenario.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

# Import external packages
import numpy as np
from scipy import sparse

# Import functions from local modules
from market.kkt_check import strategic_profit
from market.market_model import DispatchSolution, MarketCase
from mip.mip_contract import HighsMipSolver, MipSolver, MipStatus
from qcqp.qcqp_builder import assemble_qcqp, stack_solution
from qcqp.qcqp_multi import MultiQcqp
from utils.utils_config import get_bigm_scale
from utils.utils_errors import BigMConfigError, DimensionMismatchError
from utils.utils_logger import logger

#####################################
# Big-M configuration
#####################################

BIGM_FAMILIES: tuple[str, ...] = ("generation", "demand", "flow")

FAMILY_GROUP: dict[str, str] = {
    "gen_lower": "generation",
    "gen_upper": "generation",
    "load_lower": "demand",
    "load_upper": "demand",
    "flow_lower": "flow",
    "flow_upper": "flow",
}


class SlackDecision(str, Enum):
    FIX_PRIMAL_SLACK = "fix-primal-slack"
    FIX_DUAL_FACTOR = "fix-dual-factor"
    KEEP_BINARY = "keep-binary"


@dataclass(frozen=True, eq=False)
class BigMConfig:
    """Big-M bounds per family (generation, demand, flow)."""

    primal: dict[str, float]
    dual: dict[str, float]
    check_tightness: bool = True

    def __post_init__(self):
        for kind, values in (("primal", self.primal), ("dual", self.dual)):
            for family in BIGM_FAMILIES:
                if family not in values:
                    raise BigMConfigError(f"missing {kind} big-M for family '{family}'")
                value = values[family]
                if not (math.isfinite(value) and value > 0):
                    raise BigMConfigError(f"{kind} big-M for '{family}' must be positive and finite, got {value}")

    def primal_for(self, family: str) -> float:
        return float(self.primal[FAMILY_GROUP.get(family, family)])

    def dual_for(self, family: str) -> float:
        return float(self.dual[FAMILY_GROUP.get(family, family)])

    @classmethod
    def default_for(cls, case: MarketCase, scale: Optional[float] = None, check_tightness: bool = True) -> "BigMConfig":
        """M_primal = 2 x the widest slack range of the family, M_dual = 10 x the largest price."""
        scale = get_bigm_scale() if scale is None else scale
        gen, loads = case.generators, case.loads
        ranges = {
            "generation": float(np.max(gen.p_max - gen.p_min)) if len(gen) else 0.0,
            "demand": float(np.max(loads.p_max - loads.p_min)) if len(loads) else 0.0,
            "flow": 2.0 * float(np.max(case.network.limited_capacity)) if case.network.limited_lines else 0.0,
        }
        primal = {family: scale * max(2.0 * value, 1.0) for family, value in ranges.items()}
        dual_value = scale * 10.0 * max(case.max_bid(), 1.0)
        dual = {family: dual_value for family in BIGM_FAMILIES}
        logger.debug(f"Default big-M for '{case.name}': primal {primal}, dual {dual_value}")
        return cls(primal=primal, dual=dual, check_tightness=check_tightness)


#####################################
# MILP problem
#####################################


@dataclass(frozen=True, eq=False)
class MilpProblem:
    c: np.ndarray
    constant: float
    A: sparse.csr_matrix
    lb: np.ndarray
    ub: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray
    offsets: tuple[int, ...]
    binaries: tuple[tuple[int, int], ...]  # (block, pair) of each binary column, in column order
    decisions: tuple[tuple[SlackDecision, ...], ...]
    row_labels: tuple[str, ...]
    multi: MultiQcqp
    cfg: BigMConfig

    @property
    def n_variables(self) -> int:
        return self.c.size

    @property
    def n_continuous(self) -> int:
        return self.n_variables - len(self.binaries)

    @property
    def n_binaries(self) -> int:
        return len(self.binaries)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def column_label(self, j: int) -> str:
        if j >= self.n_continuous:
            b, z = self.binaries[j - self.n_continuous]
            return f"beta_b{b}_{self.multi.blocks[b].pairs[z].name}"
        b = int(np.searchsorted(self.offsets, j, side="right")) - 1
        layout = self.multi.blocks[b].layout
        local = j - self.offsets[b]
        return f"b{b}_{layout.label(local)}" if layout is not None else f"b{b}_x{local}"

    def block_vectors(self, z: np.ndarray) -> list[np.ndarray]:
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.size != self.n_variables:
            raise DimensionMismatchError(f"MILP vector of length {z.size}, expected {self.n_variables}")
        return [z[off : off + q.n].copy() for off, q in zip(self.offsets, self.multi.blocks)]

    def objective(self, z: np.ndarray) -> float:
        return float(self.c @ np.asarray(z, dtype=float) + self.constant)


@dataclass
class MilpSolution:
    status: MipStatus
    xs: Optional[list[np.ndarray]]
    objective: Optional[float]
    bound: Optional[float]
    gap: Optional[float]
    solve_time: float
    n_binaries: int
    tight: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.xs is not None


class _SparseRows:
    """Accumulates rows lo <= a^T z <= hi as coordinate triplets."""

    def __init__(self, n: int):
        self.n = n
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.labels: list[str] = []

    def add(self, cols, vals, lo: float, hi: float, label: str) -> None:
        i = len(self.lo)
        for j, v in zip(cols, vals):
            if v != 0.0:
                self.rows.append(i)
                self.cols.append(int(j))
                self.vals.append(float(v))
        self.lo.append(float(lo))
        self.hi.append(float(hi))
        self.labels.append(label)

    def add_dense(self, row: np.ndarray, offset: int, lo: float, hi: float, label: str) -> None:
        nz = np.flatnonzero(row)
        self.add(nz + offset, row[nz], lo, hi, label)

    def matrix(self) -> sparse.csr_matrix:
        return sparse.coo_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.lo), self.n)).tocsr()


def _unit_position(vector: np.ndarray) -> Optional[int]:
    nz = np.flatnonzero(vector)
    if nz.size == 1 and vector[nz[0]] == 1.0:
        return int(nz[0])
    return None


def _check_decisions(multi: MultiQcqp, decisions: Sequence[Sequence[SlackDecision]]) -> tuple[tuple[SlackDecision, ...], ...]:
    if len(decisions) != multi.n_blocks:
        raise DimensionMismatchError(f"decisions for {len(decisions)} blocks, problem has {multi.n_blocks}")
    out = []
    for b, (q, ds) in enumerate(zip(multi.blocks, decisions)):
        if len(ds) != q.n_pairs:
            raise DimensionMismatchError(f"block {b}: {len(ds)} decisions for {q.n_pairs} pairs")
        out.append(tuple(SlackDecision(d) for d in ds))
    return tuple(out)


def _assemble(multi: MultiQcqp, decisions: tuple[tuple[SlackDecision, ...], ...], cfg: BigMConfig) -> MilpProblem:
    offsets = tuple(int(v) for v in np.cumsum([0] + [q.n for q in multi.blocks])[:-1])
    n_cont = sum(q.n for q in multi.blocks)
    binaries = tuple((b, z) for b, ds in enumerate(decisions) for z, d in enumerate(ds) if d == SlackDecision.KEEP_BINARY)
    n = n_cont + len(binaries)
    binary_column = {key: n_cont + i for i, key in enumerate(binaries)}

    c = np.zeros(n)
    constant = 0.0
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[n_cont:] = 0.0
    upper[n_cont:] = 1.0
    integrality = np.zeros(n, dtype=int)
    integrality[n_cont:] = 1
    rows = _SparseRows(n)

    for b, (q, weight, off) in enumerate(zip(multi.blocks, multi.weights, offsets)):
        if q.linear_objective is None:
            raise ValueError(f"block {b} has no linear objective; the MILP needs one")
        c[off : off + q.n] = weight * q.linear_objective
        constant += weight * q.linear_constant

        for i in range(q.n_inequalities):
            rows.add_dense(q.P[i], off, -q.p0[i], np.inf, f"b{b}_{q.inequality_labels[i] if q.inequality_labels else i}")
        for m in range(q.n_equalities):
            rows.add_dense(q.V[m], off, -q.v0[m], -q.v0[m], f"b{b}_{q.equality_labels[m] if q.equality_labels else m}")

        for z, (pair, decision) in enumerate(zip(q.pairs, decisions[b])):
            m_dual = cfg.dual_for(pair.family)
            position = _unit_position(pair.w)
            if position is not None and pair.w0 == 0.0:
                upper[off + position] = min(upper[off + position], m_dual)
            else:
                rows.add_dense(pair.w, off, -np.inf, m_dual - pair.w0, f"b{b}_{pair.name}_dual_cap")

            if decision == SlackDecision.FIX_PRIMAL_SLACK:
                rows.add_dense(pair.u, off, -pair.u0, -pair.u0, f"b{b}_{pair.name}_slack_zero")
            elif decision == SlackDecision.FIX_DUAL_FACTOR:
                rows.add_dense(pair.w, off, -pair.w0, -pair.w0, f"b{b}_{pair.name}_dual_zero")
            else:
                j = binary_column[(b, z)]
                m_primal = cfg.primal_for(pair.family)
                nz = np.flatnonzero(pair.w)
                rows.add(list(nz + off) + [j], list(pair.w[nz]) + [-m_dual], -np.inf, -pair.w0, f"b{b}_{pair.name}_dual_bigM")
                nz = np.flatnonzero(pair.u)
                rows.add(list(nz + off) + [j], list(pair.u[nz]) + [m_primal], -np.inf, m_primal - pair.u0, f"b{b}_{pair.name}_slack_bigM")

    for r in multi.ramps:
        cols = [offsets[r.block] + r.position, offsets[r.prev] + r.position]
        rows.add(cols, [r.sign, -r.sign], -r.limit, np.inf, f"ramp_b{r.block}_u{r.unit}_{'up' if r.sign > 0 else 'down'}")
    for r in multi.bids:
        cols = [offsets[r.block] + r.position, offsets[r.anchor] + r.position]
        rows.add(cols, [1.0, -1.0], 0.0, 0.0, f"bid_b{r.block}_u{r.unit}")

    return MilpProblem(
        c=c,
        constant=constant,
        A=rows.matrix(),
        lb=np.array(rows.lo),
        ub=np.array(rows.hi),
        lower=lower,
        upper=upper,
        integrality=integrality,
        offsets=offsets,
        binaries=binaries,
        decisions=decisions,
        row_labels=tuple(rows.labels),
        multi=multi,
        cfg=cfg,
    )


def _resolve_cfg(multi: MultiQcqp, cfg: Optional[BigMConfig]) -> BigMConfig:
    if cfg is not None:
        return cfg
    if multi.case is None:
        raise BigMConfigError("no big-M configuration given and no market case to derive one from")
    return BigMConfig.default_for(multi.case)


def build_milp(multi: MultiQcqp, cfg: Optional[BigMConfig] = None) -> MilpProblem:
    """Baseline MILP: every complementarity pair of every block gets a binary."""
    cfg = _resolve_cfg(multi, cfg)
    decisions = tuple(tuple([SlackDecision.KEEP_BINARY] * q.n_pairs) for q in multi.blocks)
    milp = _assemble(multi, decisions, cfg)
    logger.info(f"Baseline MILP: {milp.n_continuous} continuous, {milp.n_binaries} binary, {milp.n_rows} rows")
    return milp


def build_augmented_milp(
    multi: MultiQcqp,
    decisions: Sequence[Sequence[SlackDecision]],
    cfg: Optional[BigMConfig] = None,
) -> MilpProblem:
    """MILP with the pairs classified as fixed replaced by one linear equality each."""
    cfg = _resolve_cfg(multi, cfg)
    checked = _check_decisions(multi, decisions)
    milp = _assemble(multi, checked, cfg)
    flat = [d for ds in checked for d in ds]
    logger.info(
        f"Augmented MILP: {flat.count(SlackDecision.FIX_PRIMAL_SLACK)} slacks fixed, "
        f"{flat.count(SlackDecision.FIX_DUAL_FACTOR)} duals fixed, {milp.n_binaries} binaries kept"
    )
    return milp


def decisions_from_point(multi: MultiQcqp, xs: Sequence[np.ndarray], tol: float = 1e-9) -> list[list[SlackDecision]]:
    """Fix every pair to the branch active at a complementary point; slacks at zero win ties."""
    out = []
    for q, x in zip(multi.blocks, xs):
        out.append([SlackDecision.FIX_PRIMAL_SLACK if abs(p.slack(x)) <= tol else SlackDecision.FIX_DUAL_FACTOR for p in q.pairs])
    return out


#####################################
# Solving and diagnostics
#####################################


def check_bigM_tightness(milp: MilpProblem, incumbent: np.ndarray, tol: float = 1e-6) -> list[str]:
    """Pairs whose dual or slack sits on its big-M bound at the incumbent."""
    flagged = []
    for b, x in enumerate(milp.block_vectors(incumbent)):
        for pair, decision in zip(milp.multi.blocks[b].pairs, milp.decisions[b]):
            if pair.multiplier(x) >= milp.cfg.dual_for(pair.family) - tol:
                flagged.append(f"b{b}/{pair.name}/dual")
            if decision == SlackDecision.KEEP_BINARY and pair.slack(x) >= milp.cfg.primal_for(pair.family) - tol:
                flagged.append(f"b{b}/{pair.name}/slack")
    return flagged


def _polish(milp: MilpProblem, result, solver: MipSolver):
    """Re-solve the LP with the incumbent's binaries fixed; slacks of closed branches become exact zeros."""
    binary = milp.integrality.astype(bool)
    fixed = np.round(result.x[binary])
    lower, upper = milp.lower.copy(), milp.upper.copy()
    lower[binary] = fixed
    upper[binary] = fixed
    polished = solver.submit(milp.c, milp.A, milp.lb, milp.ub, lower, upper, np.zeros_like(milp.integrality))
    if not polished.has_incumbent:
        logger.warning(f"LP polish of the incumbent returned {polished.status.value}; keeping the MILP point")
        return result
    polished.status = result.status
    polished.bound = result.bound
    polished.gap = result.gap
    polished.solve_time += result.solve_time
    return polished


def solve_milp(milp: MilpProblem, solver: Optional[MipSolver] = None) -> MilpSolution:
    solver = solver or HighsMipSolver()
    result = solver.submit(milp.c, milp.A, milp.lb, milp.ub, milp.lower, milp.upper, milp.integrality)
    if not result.has_incumbent:
        return MilpSolution(
            status=result.status,
            xs=None,
            objective=None,
            bound=None if result.bound is None else result.bound + milp.constant,
            gap=result.gap,
            solve_time=result.solve_time,
            n_binaries=milp.n_binaries,
        )
    if milp.n_binaries:
        result = _polish(milp, result, solver)
    tight = check_bigM_tightness(milp, result.x) if milp.cfg.check_tightness else []
    if tight:
        logger.warning(f"{len(tight)} values touch their big-M bound, e.g. {tight[:3]}; consider a larger --bigm-scale")
    return MilpSolution(
        status=result.status,
        xs=milp.block_vectors(result.x),
        objective=result.objective + milp.constant,
        bound=None if result.bound is None else result.bound + milp.constant,
        gap=result.gap,
        solve_time=result.solve_time,
        n_binaries=milp.n_binaries,
        tight=tight,
    )


def verify_linearization(case: MarketCase, sol: DispatchSolution, strategic_bids) -> float:
    """|bilinear profit - linearized profit| at a dispatch KKT point."""
    qcqp = assemble_qcqp(case, sol.t, sol.k)
    x = stack_solution(case, sol, strategic_bids, qcqp.layout)
    bilinear = qcqp.objective(x)
    linear = qcqp.linear_objective_value(x)
    logger.debug(f"Linearization check: bilinear {bilinear:.9f}, linear {linear:.9f}, profit {strategic_profit(case, sol):.9f}")
    return abs(bilinear - linear)
