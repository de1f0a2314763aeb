"""Environment getters fall back to defaults on missing or malformed values."""

from utils import utils_config
from utils.utils_errors import CaseParseError


def test_defaults_when_unset(monkeypatch):
    for name in ("NODAL_TOLERANCE", "NODAL_EPS0", "NODAL_BID_CAP", "NODAL_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    assert utils_config.get_tolerance() == utils_config.DEFAULT_TOLERANCE
    assert utils_config.get_eps0() == utils_config.DEFAULT_EPS0
    assert utils_config.get_bid_cap() is None
    assert utils_config.get_workers() == 1


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("NODAL_TOLERANCE", "1e-4")
    monkeypatch.setenv("NODAL_SDP_SOLVER", "scs")
    monkeypatch.setenv("NODAL_BID_CAP", "80")
    assert utils_config.get_tolerance() == 1e-4
    assert utils_config.get_sdp_solver() == "SCS"
    assert utils_config.get_bid_cap() == 80.0


def test_malformed_number_falls_back(monkeypatch):
    monkeypatch.setenv("NODAL_MIP_GAP", "tight")
    monkeypatch.setenv("NODAL_ORACLE_BUDGET", "lots")
    assert utils_config.get_mip_gap() == utils_config.DEFAULT_MIP_GAP
    assert utils_config.get_oracle_budget() == utils_config.DEFAULT_ORACLE_BUDGET


def test_workers_never_below_one(monkeypatch):
    monkeypatch.setenv("NODAL_WORKERS", "0")
    assert utils_config.get_workers() == 1


def test_parse_error_message_carries_location():
    err = CaseParseError("expected a number", line=3, column=14, field="generators[0].pmax")
    assert err.line == 3 and err.column == 14
    assert "line 3" in str(err) and "generators[0].pmax" in str(err)
