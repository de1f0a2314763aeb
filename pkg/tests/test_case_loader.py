"""Parsing, validation and serialization of market cases."""

import json
import math

import pytest

from market.case_loader import case_to_dict, load_builtin, load_case, load_case_file, parse_case, resolve_case
from utils.utils_errors import CaseParseError, CaseValidationError

MINIMAL = {
    "name": "mini",
    "network": {"buses": [1, 2], "lines": [{"from": 1, "to": 2, "reactance": 0.1, "capacity": 0.4}]},
    "generators": [
        {"name": "S1", "bus": 1, "pmin": 0, "pmax": 1, "bid": "strategic", "cost": 20},
        {"name": "G2", "bus": 2, "pmin": 0, "pmax": 1, "bid": 40},
    ],
    "loads": [{"name": "D2", "bus": 2, "pmin": 0, "pmax": 0.8, "bid": 70}],
}


def _with(**changes):
    data = json.loads(json.dumps(MINIMAL))
    data.update(changes)
    return data


def test_builtin_desk_cases_load(one_bus, two_bus, three_bus):
    assert one_bus.network.n_buses == 1 and one_bus.network.n_lines == 0
    assert two_bus.network.limited_lines == (0,)
    assert three_bus.generators.n_strategic == 1
    assert one_bus.bid_cap() == 72.0


def test_ieee30_shape(ieee30):
    assert ieee30.network.n_buses == 30
    assert ieee30.network.n_lines == 41
    assert len(ieee30.generators) == 12
    assert ieee30.generators.n_strategic == 4
    assert len(ieee30.loads) == 16
    assert len(ieee30.network.limited_lines) == 1
    assert ieee30.strategic_buses == (4, 16, 24, 30)


def test_defaults_applied():
    case = parse_case(MINIMAL)
    assert case.horizon == 1 and case.start_hour == 1
    assert case.scenarios == (1.0,)
    assert math.isinf(case.ramp)
    assert case.mva_base == 100.0


def test_unlimited_capacity_spelled_inf():
    data = _with(network={"buses": [1, 2], "lines": [{"from": 1, "to": 2, "reactance": 0.1, "capacity": "inf"}]})
    case = parse_case(data)
    assert case.network.limited_lines == ()


def test_malformed_json_reports_position():
    with pytest.raises(CaseParseError) as err:
        load_case('{"name": "x",\n  "network": }')
    assert err.value.line == 2
    assert err.value.column is not None


def test_missing_field_reports_path():
    data = _with()
    del data["generators"][1]["pmax"]
    with pytest.raises(CaseParseError) as err:
        parse_case(data)
    assert err.value.field == "generators[1].pmax"


def test_non_numeric_field_rejected():
    data = _with()
    data["loads"][0]["bid"] = "high"
    with pytest.raises(CaseParseError):
        parse_case(data)


def test_unknown_builtin():
    with pytest.raises(CaseParseError):
        load_builtin("ieee118")


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d["generators"].append({"name": "G9", "bus": 9, "pmin": 0, "pmax": 1, "bid": 1}),
        lambda d: d["network"]["lines"].append({"from": 1, "to": 7, "reactance": 0.1}),
        lambda d: d["network"]["lines"].append({"from": 1, "to": 2, "reactance": 0.0}),
        lambda d: d["network"]["lines"].append({"from": 2, "to": 2, "reactance": 0.1}),
        lambda d: d["loads"][0].update(pmin=1.0, pmax=0.5),
        lambda d: d["generators"][0].update(pmin=-0.1),
        lambda d: d.update(scenarios=[1.0, 0.0]),
        lambda d: d.update(horizon=0),
        lambda d: d["network"].update(buses=[1, 1, 2]),
    ],
)
def test_invariant_violations_rejected(mutate):
    data = _with()
    mutate(data)
    with pytest.raises(CaseValidationError):
        parse_case(data)


def test_strategic_unit_needs_cost():
    data = _with()
    del data["generators"][0]["cost"]
    with pytest.raises(CaseParseError):
        parse_case(data)


def test_hourly_bids_must_cover_horizon():
    data = _with(horizon=3, start_hour=2)
    data["loads"][0]["bid"] = [60, 61, 62]
    with pytest.raises(CaseValidationError):
        parse_case(data)
    data["loads"][0]["bid"] = [60, 61, 62, 63]
    case = parse_case(data)
    assert case.load_bids(t=2)[0] == 63


def test_bid_cap_override(monkeypatch):
    monkeypatch.setenv("NODAL_BID_CAP", "90")
    case = load_case(json.dumps(MINIMAL))
    assert case.bid_cap() == 90.0


def test_round_trip_through_file(tmp_path, two_bus):
    path = tmp_path / "two_bus.json"
    path.write_text(json.dumps(case_to_dict(two_bus)), encoding="utf-8")
    again = load_case_file(path)
    assert again == two_bus
    assert resolve_case(str(path)).name == "toy_two_bus"


@pytest.mark.parametrize("field", ["pmin", "pmax"])
def test_nan_limits_rejected_with_field(field):
    text = json.dumps(_with()).replace(f'"{field}": ', f'"{field}": NaN, "_{field}": ', 1)
    with pytest.raises(CaseParseError) as err:
        load_case(text)
    assert err.value.field == f"generators[0].{field}"


def test_infinite_limit_rejected():
    data = _with()
    data["loads"][0]["pmax"] = float("inf")
    with pytest.raises(CaseParseError) as err:
        parse_case(data)
    assert err.value.field == "loads[0].pmax"


def test_nan_limits_rejected_on_built_cases(one_bus):
    import dataclasses

    from market.case_loader import validate_case
    from market.market_model import GeneratorFleet

    broken = dataclasses.replace(one_bus.generators.generators[0], p_max=float("nan"))
    case = dataclasses.replace(one_bus, generators=GeneratorFleet((broken,) + one_bus.generators.generators[1:]))
    with pytest.raises(CaseValidationError):
        validate_case(case)
