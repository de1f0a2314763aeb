"""Command-line entry point."""

import json

import pytest

from bench.bench_cli import build_parser, main


def test_dispatch_prints_json(capsys):
    assert main(["dispatch", "--case", "toy_one_bus", "--bids", "60"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["lmp"] == {"1": pytest.approx(60.0, abs=1e-6)}
    assert result["profit"] == pytest.approx(30.0, abs=1e-6)
    assert result["kkt_max_residual"] < 1e-6


def test_dispatch_writes_out_file(tmp_path, capsys):
    out = tmp_path / "dispatch.json"
    assert main(["dispatch", "--case", "toy_two_bus", "--bids", "30", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["p_g"] == {"S1": pytest.approx(1.0, abs=1e-7), "C2": pytest.approx(3.0, abs=1e-7)}


def test_milp_and_export(tmp_path, capsys):
    lp = tmp_path / "one_bus.lp"
    assert main(["milp", "--case", "toy_one_bus", "--export", str(lp)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["status"] == "optimal"
    assert result["profit"] == pytest.approx(54.0, abs=1e-5)
    assert lp.exists()


def test_oracle_subcommand(capsys):
    assert main(["oracle", "--case", "toy_one_bus", "--step", "1"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["profit"] >= 52.0 - 1e-6


def test_modelling_errors_exit_nonzero(tmp_path):
    assert main(["dispatch", "--case", str(tmp_path / "missing.json")]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    assert main(["dispatch", "--case", str(broken)]) == 1
    assert main(["dispatch", "--case", "toy_one_bus", "--K", "25"]) == 1


def test_bench_sweep_writes_report(tmp_path, capsys):
    out = tmp_path / "sweep.json"
    code = main(["bench", "--case", "toy_one_bus", "--sweep", "scenarios", "--values", "1", "--methods", "baseline-milp", "--format", "json", "--out", str(out)])
    assert code == 0
    rows = json.loads(out.read_text())
    assert rows[0]["method"] == "baseline-milp"


def test_parser_requires_a_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


@pytest.mark.slow
def test_recover_subcommand(capsys):
    assert main(["recover", "--case", "toy_one_bus"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["profit"] <= 54.0 + 1e-5
    assert "xs" not in result
