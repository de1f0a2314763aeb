"""
case_loader.py - read market cases from JSON text.

Case format (JSON object):

    {
      "name": "toy",
      "horizon": 1, "start_hour": 1, "scenarios": [1.0],
      "ramp": 0.3, "mva_base": 100,
      "network": {"buses": [1, 2],
                  "lines": [{"from": 1, "to": 2, "reactance": 0.1, "capacity": "inf"}]},
      "generators": [{"name": "G1", "bus": 1, "pmin": 0, "pmax": 1, "bid": "strategic", "cost": 20}],
      "loads": [{"name": "D1", "bus": 2, "pmin": 0, "pmax": 0.5, "bid": 72}]
    }

A load bid is a number or an hourly series indexed by clock hour.
Built-in cases live in the data folder and are addressed by name.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import json
import math
import pathlib
from typing import Any, Optional, Union

# Import functions from local modules
from market.market_model import (
    Generator,
    GeneratorFleet,
    Line,
    Load,
    LoadSet,
    MarketCase,
    NetworkModel,
)
from utils.utils_config import get_bid_cap, get_case_folder
from utils.utils_errors import CaseParseError, CaseValidationError
from utils.utils_logger import logger

#####################################
# Built-in cases
#####################################

BUILTIN_CASES: dict[str, str] = {
    "ieee30": "ieee30.json",
    "toy_one_bus": "toy_one_bus.json",
    "toy_two_bus": "toy_two_bus.json",
    "toy_three_bus": "toy_three_bus.json",
}

#####################################
# Field helpers
#####################################


def _require(obj: dict, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise CaseParseError("expected an object", field=path)
    if key not in obj:
        raise CaseParseError("missing required field", field=f"{path}.{key}" if path else key)
    return obj[key]


def _number(value: Any, path: str, allow_inf: bool = False) -> float:
    if allow_inf and isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "unbounded"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseParseError(f"expected a number, got {value!r}", field=path)
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise CaseParseError(f"expected a finite number, got {value!r}", field=path)
    return value


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CaseParseError(f"expected an integer, got {value!r}", field=path)
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise CaseParseError(f"expected a list, got {type(value).__name__}", field=path)
    return value


#####################################
# Parsing
#####################################


def _parse_line(raw: dict, path: str) -> Line:
    return Line(
        from_bus=_integer(_require(raw, "from", path), f"{path}.from"),
        to_bus=_integer(_require(raw, "to", path), f"{path}.to"),
        reactance=_number(_require(raw, "reactance", path), f"{path}.reactance"),
        capacity=_number(raw.get("capacity", "inf"), f"{path}.capacity", allow_inf=True),
    )


def _parse_generator(raw: dict, index: int) -> Generator:
    path = f"generators[{index}]"
    bid_raw = _require(raw, "bid", path)
    ramp = raw.get("ramp")
    if isinstance(bid_raw, str) and bid_raw.strip().lower() == "strategic":
        bid = None
        cost = _number(_require(raw, "cost", path), f"{path}.cost")
    else:
        bid = _number(bid_raw, f"{path}.bid")
        cost = _number(raw["cost"], f"{path}.cost") if "cost" in raw else None
    return Generator(
        name=str(raw.get("name", f"G{index + 1}")),
        bus=_integer(_require(raw, "bus", path), f"{path}.bus"),
        p_min=_number(_require(raw, "pmin", path), f"{path}.pmin"),
        p_max=_number(_require(raw, "pmax", path), f"{path}.pmax"),
        bid=bid,
        cost=cost,
        ramp=None if ramp is None else _number(ramp, f"{path}.ramp", allow_inf=True),
    )


def _parse_load(raw: dict, index: int) -> Load:
    path = f"loads[{index}]"
    bid_raw = _require(raw, "bid", path)
    if isinstance(bid_raw, list):
        bids = tuple(_number(b, f"{path}.bid[{h}]") for h, b in enumerate(bid_raw))
        if not bids:
            raise CaseParseError("hourly bid series is empty", field=f"{path}.bid")
    else:
        bids = (_number(bid_raw, f"{path}.bid"),)
    return Load(
        name=str(raw.get("name", f"D{index + 1}")),
        bus=_integer(_require(raw, "bus", path), f"{path}.bus"),
        p_min=_number(_require(raw, "pmin", path), f"{path}.pmin"),
        p_max=_number(_require(raw, "pmax", path), f"{path}.pmax"),
        bids=bids,
    )


def parse_case(data: dict, bid_cap: Optional[float] = None) -> MarketCase:
    """Build a MarketCase from an already decoded JSON object."""
    if not isinstance(data, dict):
        raise CaseParseError("case must be a JSON object")
    network_raw = _require(data, "network", "")
    buses = tuple(_integer(b, f"network.buses[{i}]") for i, b in enumerate(_list(_require(network_raw, "buses", "network"), "network.buses")))
    lines = tuple(
        _parse_line(raw, f"network.lines[{i}]")
        for i, raw in enumerate(_list(_require(network_raw, "lines", "network"), "network.lines"))
    )
    generators = tuple(_parse_generator(raw, i) for i, raw in enumerate(_list(_require(data, "generators", ""), "generators")))
    loads = tuple(_parse_load(raw, i) for i, raw in enumerate(_list(data.get("loads", []), "loads")))
    scenarios = tuple(_number(f, f"scenarios[{i}]") for i, f in enumerate(_list(data.get("scenarios", [1.0]), "scenarios")))
    notes = data.get("notes", [])
    if isinstance(notes, str):
        notes = [notes]

    case = MarketCase(
        name=str(data.get("name", "case")),
        network=NetworkModel(node_ids=buses, lines=lines),
        generators=GeneratorFleet(generators=generators),
        loads=LoadSet(loads=loads),
        horizon=_integer(data.get("horizon", 1), "horizon"),
        scenarios=scenarios,
        start_hour=_integer(data.get("start_hour", 1), "start_hour"),
        ramp=_number(data.get("ramp", "inf"), "ramp", allow_inf=True),
        mva_base=_number(data.get("mva_base", 100.0), "mva_base"),
        bid_cap_override=bid_cap if bid_cap is not None else (
            _number(data["bid_cap"], "bid_cap") if data.get("bid_cap") is not None else None
        ),
        notes=tuple(str(n) for n in notes),
    )
    validate_case(case)
    return case


def load_case(source: str, bid_cap: Optional[float] = None) -> MarketCase:
    """Parse and validate case text."""
    try:
        data = json.loads(source)
    except json.JSONDecodeError as e:
        raise CaseParseError(e.msg, line=e.lineno, column=e.colno) from e
    case = parse_case(data, bid_cap=bid_cap if bid_cap is not None else get_bid_cap())
    logger.info(
        f"Loaded case '{case.name}': {case.network.n_buses} buses, {case.network.n_lines} lines, "
        f"{len(case.generators)} generators ({case.generators.n_strategic} strategic), "
        f"{len(case.loads)} loads, T={case.horizon}, K={case.n_scenarios}"
    )
    return case


def load_case_file(path: Union[str, pathlib.Path], bid_cap: Optional[float] = None) -> MarketCase:
    path = pathlib.Path(path)
    logger.info(f"Reading case file {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CaseParseError(f"cannot read case file {path}: {e.strerror}") from e
    return load_case(text, bid_cap=bid_cap)


def load_builtin(name: str, bid_cap: Optional[float] = None) -> MarketCase:
    if name not in BUILTIN_CASES:
        raise CaseParseError(f"unknown built-in case '{name}'; choose from {sorted(BUILTIN_CASES)}")
    return load_case_file(get_case_folder().joinpath(BUILTIN_CASES[name]), bid_cap=bid_cap)


def resolve_case(reference: str, bid_cap: Optional[float] = None) -> MarketCase:
    """Load a built-in case by name, otherwise treat the reference as a file path."""
    if reference in BUILTIN_CASES:
        return load_builtin(reference, bid_cap=bid_cap)
    return load_case_file(reference, bid_cap=bid_cap)


#####################################
# Validation
#####################################


def validate_case(case: MarketCase) -> None:
    """Raise CaseValidationError on the first broken invariant."""
    network = case.network
    if not network.node_ids:
        raise CaseValidationError("network has no buses")
    if len(set(network.node_ids)) != len(network.node_ids):
        raise CaseValidationError("duplicate bus identifiers in network")

    for l, line in enumerate(network.lines):
        for bus in (line.from_bus, line.to_bus):
            if not network.has_bus(bus):
                raise CaseValidationError(f"line {l + 1} references unknown bus {bus}")
        if line.from_bus == line.to_bus:
            raise CaseValidationError(f"line {l + 1} connects bus {line.from_bus} to itself")
        if not line.reactance > 0:
            raise CaseValidationError(f"line {l + 1} has nonpositive reactance {line.reactance}")
        if not line.capacity > 0:
            raise CaseValidationError(f"line {l + 1} has nonpositive capacity {line.capacity}")

    for gen in case.generators.generators:
        if not network.has_bus(gen.bus):
            raise CaseValidationError(f"generator {gen.name} references unknown bus {gen.bus}")
        if not (math.isfinite(gen.p_min) and math.isfinite(gen.p_max)):
            raise CaseValidationError(f"generator {gen.name} needs finite pmin and pmax, got {gen.p_min}, {gen.p_max}")
        if gen.bid is not None and not math.isfinite(gen.bid):
            raise CaseValidationError(f"generator {gen.name} has a non-finite bid {gen.bid}")
        if gen.p_min < 0 or gen.p_min > gen.p_max:
            raise CaseValidationError(f"generator {gen.name} needs 0 <= pmin <= pmax, got {gen.p_min} > {gen.p_max}")
        if gen.is_strategic and gen.cost is None:
            raise CaseValidationError(f"strategic generator {gen.name} has no cost")
        if gen.ramp is not None and gen.ramp < 0:
            raise CaseValidationError(f"generator {gen.name} has negative ramp {gen.ramp}")

    last_hour = case.start_hour - 1 + case.horizon
    for load in case.loads.loads:
        if not network.has_bus(load.bus):
            raise CaseValidationError(f"load {load.name} references unknown bus {load.bus}")
        if not (math.isfinite(load.p_min) and math.isfinite(load.p_max)):
            raise CaseValidationError(f"load {load.name} needs finite pmin and pmax, got {load.p_min}, {load.p_max}")
        if not all(math.isfinite(b) for b in load.bids):
            raise CaseValidationError(f"load {load.name} has a non-finite bid")
        if load.p_min < 0 or load.p_min > load.p_max:
            raise CaseValidationError(f"load {load.name} needs 0 <= pmin <= pmax, got {load.p_min} > {load.p_max}")
        if load.is_hourly and len(load.bids) < last_hour:
            raise CaseValidationError(
                f"load {load.name} has {len(load.bids)} hourly bids but the horizon reaches hour {last_hour}"
            )

    if case.horizon < 1:
        raise CaseValidationError(f"horizon must be at least 1, got {case.horizon}")
    if case.start_hour < 1:
        raise CaseValidationError(f"start_hour must be at least 1, got {case.start_hour}")
    if not case.scenarios:
        raise CaseValidationError("at least one scenario factor is required")
    if any(not f > 0 for f in case.scenarios):
        raise CaseValidationError(f"scenario factors must be positive, got {list(case.scenarios)}")
    if case.ramp < 0:
        raise CaseValidationError(f"ramp must be nonnegative, got {case.ramp}")
    if case.bid_cap_override is not None and not case.bid_cap_override > 0:
        raise CaseValidationError(f"bid cap must be positive, got {case.bid_cap_override}")


#####################################
# Serialization
#####################################


def _fmt(value: float) -> Union[float, str]:
    return "inf" if math.isinf(value) else value


def case_to_dict(case: MarketCase) -> dict:
    """Inverse of parse_case, for writing derived cases back to disk."""
    return {
        "name": case.name,
        "horizon": case.horizon,
        "start_hour": case.start_hour,
        "scenarios": list(case.scenarios),
        "ramp": _fmt(case.ramp),
        "mva_base": case.mva_base,
        "network": {
            "buses": list(case.network.node_ids),
            "lines": [
                {"from": l.from_bus, "to": l.to_bus, "reactance": l.reactance, "capacity": _fmt(l.capacity)}
                for l in case.network.lines
            ],
        },
        "generators": [
            {
                "name": g.name,
                "bus": g.bus,
                "pmin": g.p_min,
                "pmax": g.p_max,
                "bid": "strategic" if g.is_strategic else g.bid,
                **({"cost": g.cost} if g.cost is not None else {}),
                **({"ramp": _fmt(g.ramp)} if g.ramp is not None else {}),
            }
            for g in case.generators.generators
        ],
        "loads": [
            {
                "name": d.name,
                "bus": d.bus,
                "pmin": d.p_min,
                "pmax": d.p_max,
                "bid": list(d.bids) if d.is_hourly else d.bids[0],
            }
            for d in case.loads.loads
        ],
        **({"bid_cap": case.bid_cap_override} if case.bid_cap_override is not None else {}),
        "notes": list(case.notes),
    }
