"""
scenarios.py - derived cases for the experiment sweeps.

Every helper returns a new, validated MarketCase:

- with_scenarios / scale_scenarios: price-scaling scenarios
- with_horizon: horizon length and start hour
- with_line_capacity: capacity of the congested line
- with_ramp: ramp limit of the strategic units
- extend_network: more buses, generators and loads on a 30-bus base
- random_case: small random networks for property checks
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import dataclasses
import math
from typing import Optional, Sequence

# Import external packages
import numpy as np

# Import functions from local modules
from market.case_loader import validate_case
from market.market_model import Generator, GeneratorFleet, Line, Load, LoadSet, MarketCase, NetworkModel, ScenarioParameters
from utils.utils_errors import CaseValidationError, NetworkExtensionError, ScenarioFactorError
from utils.utils_logger import logger

#####################################
# Scenario factors
#####################################

# Scaling factors of the twenty price scenarios, scenario 1 first.
SCENARIO_FACTORS: tuple[float, ...] = tuple(round(2.0 - 0.1 * i, 1) for i in range(20))


def scenario_factors(K: int) -> tuple[float, ...]:
    """K consecutive factors centred on 1.0; K = 20 returns the whole table."""
    if not 1 <= K <= len(SCENARIO_FACTORS):
        raise ScenarioFactorError(f"K must be between 1 and {len(SCENARIO_FACTORS)}, got {K}")
    start = max(0, min(10 - K // 2, len(SCENARIO_FACTORS) - K))
    return SCENARIO_FACTORS[start : start + K]


def _check_factors(factors: Sequence[float]) -> tuple[float, ...]:
    factors = tuple(float(f) for f in factors)
    if not factors:
        raise ScenarioFactorError("at least one scenario factor is required")
    bad = [f for f in factors if not (math.isfinite(f) and f > 0)]
    if bad:
        raise ScenarioFactorError(f"scenario factors must be positive and finite, got {bad}")
    return factors


def with_scenarios(case: MarketCase, factors: Sequence[float]) -> MarketCase:
    derived = dataclasses.replace(case, scenarios=_check_factors(factors))
    logger.debug(f"'{case.name}' with scenario factors {list(derived.scenarios)}")
    return derived


def scale_scenarios(case: MarketCase, factors: Sequence[float]) -> list[ScenarioParameters]:
    """Scaled non-strategic generator bids and load bids of every scenario."""
    derived = with_scenarios(case, factors)
    return [derived.scenario_parameters(k) for k in range(derived.n_scenarios)]


#####################################
# Horizon, capacity and ramp
#####################################


def with_horizon(case: MarketCase, T: int, start_hour: Optional[int] = None) -> MarketCase:
    derived = dataclasses.replace(case, horizon=int(T), start_hour=case.start_hour if start_hour is None else int(start_hour))
    validate_case(derived)
    return derived


def congested_line(case: MarketCase) -> int:
    """Index of the only finite-capacity line."""
    limited = case.network.limited_lines
    if len(limited) != 1:
        raise CaseValidationError(f"case '{case.name}' has {len(limited)} limited lines; name the line explicitly")
    return limited[0]


def with_line_capacity(case: MarketCase, capacity: float, line: Optional[int] = None) -> MarketCase:
    """Set the capacity of one line (default: the congested line)."""
    if not capacity > 0:
        raise CaseValidationError(f"line capacity must be positive, got {capacity}")
    line = congested_line(case) if line is None else line
    lines = list(case.network.lines)
    lines[line] = dataclasses.replace(lines[line], capacity=float(capacity))
    network = NetworkModel(node_ids=case.network.node_ids, lines=tuple(lines))
    derived = dataclasses.replace(case, network=network)
    validate_case(derived)
    return derived


def with_ramp(case: MarketCase, ramp: float) -> MarketCase:
    """Case-wide ramp limit; per-unit overrides are cleared so the sweep value applies to every unit."""
    generators = tuple(dataclasses.replace(g, ramp=None) for g in case.generators.generators)
    derived = dataclasses.replace(case, ramp=float(ramp), generators=GeneratorFleet(generators))
    validate_case(derived)
    return derived


#####################################
# Network extension
#####################################

# bus count -> (generators, loads)
EXTENSION_SIZES: dict[int, tuple[int, int]] = {
    30: (12, 16),
    40: (15, 21),
    50: (17, 26),
    60: (19, 31),
    70: (21, 35),
    80: (23, 41),
}

ADDED_LOAD = 0.1
ADDED_LOAD_BID = 72.0
ADDED_GENERATOR_BID = 0.0


def extension_counts(buses: int) -> tuple[int, int]:
    """(generators, loads) for a bus count, interpolated between table rows."""
    sizes = sorted(EXTENSION_SIZES)
    if not sizes[0] <= buses <= sizes[-1]:
        raise NetworkExtensionError(f"bus count {buses} outside the supported range {sizes[0]}..{sizes[-1]}")
    gens = np.interp(buses, sizes, [EXTENSION_SIZES[s][0] for s in sizes])
    loads = np.interp(buses, sizes, [EXTENSION_SIZES[s][1] for s in sizes])
    return int(round(gens)), int(round(loads))


def extend_network(case: MarketCase, target_buses: int) -> MarketCase:
    """Grow the network to target_buses; added generation equals added load.

    New bus j joins bus j-1 (reactance 0.1) and one bus of the base network
    (reactance 0.2) on unlimited lines. Added loads are fixed at 0.1 p.u. with
    bid 72; added generators are fixed at an equal share of the added load with
    bid 0. Strategic units and the congested line are untouched.
    """
    base = case.network.n_buses
    if target_buses < base:
        raise NetworkExtensionError(f"target {target_buses} buses is below the current {base}")
    if target_buses == base:
        return case
    gens_now, loads_now = extension_counts(base)
    gens_target, loads_target = extension_counts(target_buses)
    add_gens = max(gens_target - gens_now, 1)
    add_loads = max(loads_target - loads_now, 1)

    node_ids = list(case.network.node_ids)
    base_ids = tuple(node_ids)
    lines = list(case.network.lines)
    new_ids = []
    next_id = max(node_ids) + 1
    for j in range(target_buses - base):
        bus = next_id + j
        lines.append(Line(from_bus=node_ids[-1], to_bus=bus, reactance=0.1))
        partner = base_ids[j % base]
        if partner != node_ids[-1]:
            lines.append(Line(from_bus=partner, to_bus=bus, reactance=0.2))
        node_ids.append(bus)
        new_ids.append(bus)

    loads = list(case.loads.loads)
    for d in range(add_loads):
        bus = new_ids[d % len(new_ids)]
        loads.append(Load(name=f"DX{d + 1}", bus=bus, p_min=ADDED_LOAD, p_max=ADDED_LOAD, bids=(ADDED_LOAD_BID,)))
    share = ADDED_LOAD * add_loads / add_gens
    generators = list(case.generators.generators)
    for g in range(add_gens):
        bus = new_ids[(len(new_ids) - 1 - g) % len(new_ids)]
        generators.append(Generator(name=f"GX{g + 1}", bus=bus, p_min=share, p_max=share, bid=ADDED_GENERATOR_BID))

    derived = dataclasses.replace(
        case,
        name=f"{case.name}_ext{target_buses}",
        network=NetworkModel(node_ids=tuple(node_ids), lines=tuple(lines)),
        generators=GeneratorFleet(tuple(generators)),
        loads=LoadSet(tuple(loads)),
        notes=case.notes + (f"extended from {base} to {target_buses} buses",),
    )
    validate_case(derived)
    logger.info(
        f"Extended '{case.name}' to {target_buses} buses: +{add_gens} generators, +{add_loads} loads, "
        f"{len(lines) - case.network.n_lines} new lines"
    )
    return derived


#####################################
# Random desk cases
#####################################


def random_case(rng: np.random.Generator, n_buses: int, name: Optional[str] = None) -> MarketCase:
    """Small connected case with one strategic unit and one congested line.

    Every load and generator has p_min = 0, so the dispatch LP is always feasible.
    """
    if n_buses < 1:
        raise CaseValidationError(f"need at least one bus, got {n_buses}")
    ids = tuple(range(1, n_buses + 1))
    lines = [Line(from_bus=i, to_bus=i + 1, reactance=float(rng.uniform(0.05, 0.3))) for i in range(1, n_buses)]
    for _ in range(int(rng.integers(0, n_buses))):
        a, b = (int(v) for v in rng.choice(ids, size=2, replace=False)) if n_buses > 1 else (1, 1)
        if a != b:
            lines.append(Line(from_bus=a, to_bus=b, reactance=float(rng.uniform(0.05, 0.3))))
    if lines:
        l = int(rng.integers(0, len(lines)))
        lines[l] = dataclasses.replace(lines[l], capacity=float(rng.uniform(0.1, 1.0)))

    generators = [
        Generator(name="S1", bus=int(rng.choice(ids)), p_min=0.0, p_max=float(rng.uniform(0.5, 2.0)), cost=float(rng.uniform(20, 40)))
    ]
    for g in range(int(rng.integers(1, 4))):
        generators.append(
            Generator(name=f"G{g + 1}", bus=int(rng.choice(ids)), p_min=0.0, p_max=float(rng.uniform(0.2, 1.5)), bid=float(rng.uniform(10, 60)))
        )
    loads = [
        Load(name=f"D{d + 1}", bus=int(rng.choice(ids)), p_min=0.0, p_max=float(rng.uniform(0.2, 1.5)), bids=(float(rng.uniform(50, 90)),))
        for d in range(int(rng.integers(1, 4)))
    ]
    case = MarketCase(
        name=name or f"random_{n_buses}bus",
        network=NetworkModel(node_ids=ids, lines=tuple(lines)),
        generators=GeneratorFleet(tuple(generators)),
        loads=LoadSet(tuple(loads)),
    )
    validate_case(case)
    return case
