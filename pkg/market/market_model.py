"""
market_model.py - data model of a nodal market instance.

A MarketCase bundles the DC network, the generator fleet (with its
strategic subset), the loads, the scheduling horizon and the equally
likely price scenarios. Everything here is immutable once built; arrays
handed out by the properties are read-only.

Indices are 0-based internally: slot t in [0, T) maps to clock hour
start_hour + t, scenario k in [0, K) uses factor scenarios[k].
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

# Import external packages
import numpy as np

#####################################
# Helpers
#####################################


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


#####################################
# Network
#####################################


@dataclass(frozen=True)
class Line:
    """Transmission line; capacity is math.inf when unbounded."""

    from_bus: int
    to_bus: int
    reactance: float
    capacity: float = math.inf

    @property
    def is_limited(self) -> bool:
        return math.isfinite(self.capacity)


@dataclass(frozen=True)
class NetworkModel:
    """Buses and lines of a lossless DC network."""

    node_ids: tuple[int, ...]
    lines: tuple[Line, ...]

    @cached_property
    def _position(self) -> dict[int, int]:
        return {bus: i for i, bus in enumerate(self.node_ids)}

    @property
    def n_buses(self) -> int:
        return len(self.node_ids)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    def bus_index(self, bus: int) -> int:
        return self._position[bus]

    def has_bus(self, bus: int) -> bool:
        return bus in self._position

    @cached_property
    def incidence(self) -> np.ndarray:
        """Bus-line incidence A: +1 at the sending bus, -1 at the receiving bus."""
        a = np.zeros((self.n_buses, self.n_lines))
        for l, line in enumerate(self.lines):
            a[self.bus_index(line.from_bus), l] = 1.0
            a[self.bus_index(line.to_bus), l] = -1.0
        return _frozen(a)

    @cached_property
    def reactance_diag(self) -> np.ndarray:
        return _frozen(np.diag([line.reactance for line in self.lines]))

    @cached_property
    def flow_matrix(self) -> np.ndarray:
        """V^-1 A^T, so that line flows are flow_matrix @ theta."""
        x = np.array([line.reactance for line in self.lines])
        return _frozen(self.incidence.T / x[:, None])

    @cached_property
    def susceptance_matrix(self) -> np.ndarray:
        """A V^-1 A^T."""
        return _frozen(self.incidence @ self.flow_matrix)

    @cached_property
    def limited_lines(self) -> tuple[int, ...]:
        return tuple(l for l, line in enumerate(self.lines) if line.is_limited)

    @cached_property
    def limited_flow_matrix(self) -> np.ndarray:
        return _frozen(self.flow_matrix[list(self.limited_lines), :].reshape(len(self.limited_lines), self.n_buses))

    @cached_property
    def limited_capacity(self) -> np.ndarray:
        return _frozen(np.array([self.lines[l].capacity for l in self.limited_lines], dtype=float))

    def line_flows(self, theta: np.ndarray) -> np.ndarray:
        return self.flow_matrix @ theta


#####################################
# Generators and loads
#####################################


@dataclass(frozen=True)
class Generator:
    """A generator offer. Strategic units have no fixed bid but a marginal cost."""

    name: str
    bus: int
    p_min: float
    p_max: float
    bid: Optional[float] = None
    cost: Optional[float] = None
    ramp: Optional[float] = None

    @property
    def is_strategic(self) -> bool:
        return self.bid is None


@dataclass(frozen=True)
class GeneratorFleet:
    generators: tuple[Generator, ...]

    def __len__(self) -> int:
        return len(self.generators)

    @cached_property
    def strategic_indices(self) -> tuple[int, ...]:
        return tuple(g for g, gen in enumerate(self.generators) if gen.is_strategic)

    @cached_property
    def nonstrategic_indices(self) -> tuple[int, ...]:
        return tuple(g for g, gen in enumerate(self.generators) if not gen.is_strategic)

    @property
    def n_strategic(self) -> int:
        return len(self.strategic_indices)

    @cached_property
    def p_min(self) -> np.ndarray:
        return _frozen(np.array([g.p_min for g in self.generators], dtype=float))

    @cached_property
    def p_max(self) -> np.ndarray:
        return _frozen(np.array([g.p_max for g in self.generators], dtype=float))

    @cached_property
    def strategic_costs(self) -> np.ndarray:
        return _frozen(np.array([self.generators[g].cost for g in self.strategic_indices], dtype=float))

    @cached_property
    def strategic_selector(self) -> np.ndarray:
        """B_S: one row per strategic unit picking its column out of the fleet."""
        b = np.zeros((self.n_strategic, len(self.generators)))
        for s, g in enumerate(self.strategic_indices):
            b[s, g] = 1.0
        return _frozen(b)

    def incidence(self, network: NetworkModel) -> np.ndarray:
        """B_G (buses x generators)."""
        b = np.zeros((network.n_buses, len(self.generators)))
        for g, gen in enumerate(self.generators):
            b[network.bus_index(gen.bus), g] = 1.0
        return b


@dataclass(frozen=True)
class Load:
    """A price-responsive load; bids holds one value or an hourly series."""

    name: str
    bus: int
    p_min: float
    p_max: float
    bids: tuple[float, ...]

    @property
    def is_hourly(self) -> bool:
        return len(self.bids) > 1

    def bid_at(self, hour: int) -> float:
        """Bid at 1-based clock hour."""
        if not self.is_hourly:
            return self.bids[0]
        return self.bids[hour - 1]


@dataclass(frozen=True)
class LoadSet:
    loads: tuple[Load, ...]

    def __len__(self) -> int:
        return len(self.loads)

    @cached_property
    def p_min(self) -> np.ndarray:
        return _frozen(np.array([d.p_min for d in self.loads], dtype=float))

    @cached_property
    def p_max(self) -> np.ndarray:
        return _frozen(np.array([d.p_max for d in self.loads], dtype=float))

    def incidence(self, network: NetworkModel) -> np.ndarray:
        """B_D (buses x loads)."""
        b = np.zeros((network.n_buses, len(self.loads)))
        for d, load in enumerate(self.loads):
            b[network.bus_index(load.bus), d] = 1.0
        return b

    def bids_at(self, hour: int) -> np.ndarray:
        return np.array([d.bid_at(hour) for d in self.loads], dtype=float)


#####################################
# Market case
#####################################


@dataclass(frozen=True, eq=False)
class ScenarioParameters:
    """Scaled price data of one scenario k over the whole horizon."""

    k: int
    factor: float
    generator_bids: np.ndarray  # fleet length, NaN at strategic positions
    load_bids: np.ndarray  # T x D


@dataclass(frozen=True)
class MarketCase:
    name: str
    network: NetworkModel
    generators: GeneratorFleet
    loads: LoadSet
    horizon: int = 1
    scenarios: tuple[float, ...] = (1.0,)
    start_hour: int = 1
    ramp: float = math.inf
    mva_base: float = 100.0
    bid_cap_override: Optional[float] = None
    notes: tuple[str, ...] = field(default=())

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    @property
    def scenario_weight(self) -> float:
        return 1.0 / len(self.scenarios)

    def hour_of(self, t: int) -> int:
        return self.start_hour + t

    @cached_property
    def gen_incidence(self) -> np.ndarray:
        return _frozen(self.generators.incidence(self.network))

    @cached_property
    def load_incidence(self) -> np.ndarray:
        return _frozen(self.loads.incidence(self.network))

    @cached_property
    def strategic_buses(self) -> tuple[int, ...]:
        return tuple(self.generators.generators[g].bus for g in self.generators.strategic_indices)

    def ramp_limit(self, g: int) -> float:
        """Ramp limit of generator g in p.u. per slot; the case-wide value unless the unit sets its own."""
        own = self.generators.generators[g].ramp
        return self.ramp if own is None else own

    def generator_bids(self, strategic_bids: np.ndarray, k: int = 0) -> np.ndarray:
        """Offer price of every unit in scenario k; strategic entries come from strategic_bids."""
        factor = self.scenarios[k]
        a = np.empty(len(self.generators))
        for g, gen in enumerate(self.generators.generators):
            if not gen.is_strategic:
                a[g] = factor * gen.bid
        a[list(self.generators.strategic_indices)] = np.asarray(strategic_bids, dtype=float)
        return a

    def nonstrategic_bids(self, k: int = 0) -> np.ndarray:
        return self.generator_bids(np.full(self.generators.n_strategic, np.nan), k)

    def load_bids(self, t: int = 0, k: int = 0) -> np.ndarray:
        return self.scenarios[k] * self.loads.bids_at(self.hour_of(t))

    def scenario_parameters(self, k: int) -> ScenarioParameters:
        load_bids = np.vstack([self.load_bids(t, k) for t in range(self.horizon)]) if len(self.loads) else np.zeros((self.horizon, 0))
        return ScenarioParameters(
            k=k,
            factor=self.scenarios[k],
            generator_bids=_frozen(self.nonstrategic_bids(k)),
            load_bids=_frozen(load_bids),
        )

    def bid_cap(self) -> float:
        """Upper bound on strategic bids: the largest scaled bid or cost in the case."""
        if self.bid_cap_override is not None:
            return float(self.bid_cap_override)
        return self._largest_price()

    def max_bid(self) -> float:
        """Largest price appearing anywhere in the case, strategic cap included."""
        return max(self._largest_price(), self.bid_cap())

    def _largest_price(self) -> float:
        candidates = [0.0]
        for k in range(self.n_scenarios):
            for t in range(self.horizon):
                bids = self.load_bids(t, k)
                if bids.size:
                    candidates.append(float(bids.max()))
            others = self.nonstrategic_bids(k)
            others = others[~np.isnan(others)]
            if others.size:
                candidates.append(float(others.max()))
        if self.generators.n_strategic:
            candidates.append(float(self.generators.strategic_costs.max()))
        return max(candidates)


#####################################
# Dispatch solution
#####################################


@dataclass(frozen=True, eq=False)
class DispatchSolution:
    """Primal dispatch and every dual of the economic dispatch LP at slot t, scenario k."""

    p_g: np.ndarray
    p_d: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    sigma: np.ndarray
    delta: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    objective: float
    t: int = 0
    k: int = 0

    def __post_init__(self):
        for name in ("p_g", "p_d", "theta", "lam", "sigma", "delta", "zeta", "xi", "phi", "psi"):
            _frozen(np.asarray(getattr(self, name)))

    def scaled_duals(self, factor: float) -> "DispatchSolution":
        """Same primal point, every dual multiplied by factor."""
        return DispatchSolution(
            p_g=self.p_g.copy(),
            p_d=self.p_d.copy(),
            theta=self.theta.copy(),
            lam=factor * self.lam,
            sigma=factor * self.sigma,
            delta=factor * self.delta,
            zeta=factor * self.zeta,
            xi=factor * self.xi,
            phi=factor * self.phi,
            psi=factor * self.psi,
            objective=factor * self.objective,
            t=self.t,
            k=self.k,
        )
