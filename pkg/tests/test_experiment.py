"""Sweep cells, result tables and report files."""

import pandas as pd
import pytest

from bench.experiment import COLUMNS, ExperimentSpec, ResultRow, derive_case, emit_report, read_report, run_experiment


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(case="toy_one_bus", sweep="weather")
    with pytest.raises(ValueError):
        ExperimentSpec(case="toy_one_bus", methods=("gradient-descent",))
    with pytest.raises(ValueError):
        ExperimentSpec(case="toy_one_bus", values=())
    with pytest.raises(ValueError):
        ExperimentSpec(case="toy_two_bus", sweep="ramp", values=(0.1, -1.0))


def test_derive_case_per_sweep(two_bus, ieee30):
    spec = ExperimentSpec(case="toy_two_bus", sweep="line-capacity", values=(2.0,), K=2)
    case = derive_case(two_bus, spec, 2.0, 1)
    assert case.network.limited_capacity[0] == 2.0
    assert case.scenarios == (1.1, 1.0)

    spec = ExperimentSpec(case="toy_two_bus", sweep="scenarios", values=(3,), T=2)
    case = derive_case(two_bus, spec, 3, 1)
    assert case.n_scenarios == 3 and case.horizon == 2

    spec = ExperimentSpec(case="ieee30", sweep="buses", values=(50,))
    assert derive_case(ieee30, spec, 50, 1).network.n_buses == 50


def test_run_experiment_desk_case():
    spec = ExperimentSpec(case="toy_one_bus", sweep="scenarios", values=(1,), methods=("baseline-milp", "brute-force"))
    table = run_experiment(spec)
    assert list(table.columns) == list(COLUMNS)
    assert len(table) == 2
    milp = table[table["method"] == "baseline-milp"].iloc[0]
    assert milp["profit"] == pytest.approx(54.0, abs=1e-5)
    assert milp["optimality"] == pytest.approx(1.0)
    assert milp["status"] == "optimal"
    oracle = table[table["method"] == "brute-force"].iloc[0]
    assert oracle["optimality"] >= 0.998


def test_errors_are_recorded_not_raised():
    spec = ExperimentSpec(case="toy_one_bus", sweep="horizon", values=(2,), methods=("brute-force",))
    table = run_experiment(spec)
    row = table.iloc[0]
    assert row["status"].startswith("error:")
    assert "no reference" in row["status"]
    assert pd.isna(row["profit"])


def test_windows_are_averaged():
    spec = ExperimentSpec(case="toy_one_bus", sweep="scenarios", values=(1,), methods=("baseline-milp",), start_hours=(1, 2))
    table = run_experiment(spec)
    assert len(table) == 1
    assert table.iloc[0]["profit"] == pytest.approx(54.0, abs=1e-5)


def test_report_round_trip(tmp_path):
    rows = [
        ResultRow(method="sdp+recovery", sweep=1.0, profit=53.0, optimality=53.0 / 54.0, gap_pct=1.5, time_s=0.4, iterations=2, status="feasible"),
        ResultRow(method="baseline-milp", sweep=1.0, profit=54.0, optimality=1.0, time_s=0.1, status="optimal"),
    ]
    csv_path = emit_report(rows, tmp_path / "out" / "table.csv")
    text = csv_path.read_text()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    assert "0.9815" in text
    back = read_report(csv_path)
    assert back["profit"].tolist() == [53.0, 54.0]

    json_path = emit_report(rows, tmp_path / "out" / "table.json")
    again = read_report(json_path)
    assert again["method"].tolist() == ["sdp+recovery", "baseline-milp"]
    assert again["optimality"].iloc[0] == pytest.approx(0.9815)


def test_report_rejects_empty_or_unknown(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "empty.csv")
    row = [ResultRow(method="baseline-milp", sweep=1.0, profit=1.0)]
    with pytest.raises(ValueError):
        emit_report(row, tmp_path / "table.xlsx")


@pytest.mark.parametrize("exc", [ValueError("grid exploded"), ZeroDivisionError("grid exploded")])
def test_library_exceptions_become_error_rows(monkeypatch, exc):
    import bench.experiment

    def broken_oracle(case):
        raise exc

    monkeypatch.setattr(bench.experiment, "brute_force_oracle", broken_oracle)
    spec = ExperimentSpec(case="toy_one_bus", sweep="scenarios", values=(1,), methods=("baseline-milp", "brute-force"))
    table = run_experiment(spec)
    milp = table[table["method"] == "baseline-milp"].iloc[0]
    oracle = table[table["method"] == "brute-force"].iloc[0]
    assert milp["profit"] == pytest.approx(54.0, abs=1e-5)
    assert oracle["status"].startswith("error:")
    assert "grid exploded" in oracle["status"]
