"""Big-M MILP: configuration, assembly, desk optima and export."""

import numpy as np
import pytest

from market.dispatch_lp import dispatch
from mip.milp_export import column_names, export_milp_lp, to_pyomo
from mip.milp_reform import (
    BigMConfig,
    SlackDecision,
    build_augmented_milp,
    build_milp,
    decisions_from_point,
    solve_milp,
    verify_linearization,
)
from mip.mip_contract import HighsMipSolver, MipStatus, row_violation
from qcqp.qcqp_builder import stack_solution
from qcqp.qcqp_multi import assemble_multi, is_multi_feasible
from utils.utils_errors import BigMConfigError, DimensionMismatchError

#####################################
# Configuration
#####################################


def test_default_bigm_one_bus(one_bus):
    cfg = BigMConfig.default_for(one_bus, scale=1.0)
    assert cfg.primal == {"generation": 20.0, "demand": 10.0, "flow": 1.0}
    assert cfg.dual_for("gen_upper") == 720.0
    assert cfg.primal_for("load_lower") == 10.0
    assert BigMConfig.default_for(one_bus, scale=2.0).dual_for("flow") == 1440.0


@pytest.mark.parametrize(
    "primal",
    [
        {"generation": 1.0, "demand": 1.0},
        {"generation": 1.0, "demand": 0.0, "flow": 1.0},
        {"generation": float("inf"), "demand": 1.0, "flow": 1.0},
    ],
)
def test_bigm_validation(primal):
    with pytest.raises(BigMConfigError):
        BigMConfig(primal=primal, dual={"generation": 1.0, "demand": 1.0, "flow": 1.0})


#####################################
# Assembly
#####################################


def test_baseline_shape(one_bus):
    milp = build_milp(assemble_multi(one_bus))
    assert milp.n_continuous == 12
    assert milp.n_binaries == 6
    assert np.all(milp.integrality[milp.n_continuous :] == 1)
    assert milp.column_label(milp.n_continuous).startswith("beta_b0_gen_lower")
    assert milp.column_label(1) == "b0_pg[0]"


def test_fixed_decisions_remove_binaries(one_bus):
    multi = assemble_multi(one_bus)
    sol = dispatch(one_bus, [71.0])
    x = stack_solution(one_bus, sol, [71.0], multi.blocks[0].layout)
    decisions = decisions_from_point(multi, [x])
    milp = build_augmented_milp(multi, decisions)
    assert milp.n_binaries == 0
    assert any(label.endswith("_slack_zero") for label in milp.row_labels)
    assert any(label.endswith("_dual_zero") for label in milp.row_labels)


def test_decision_count_checked(one_bus):
    multi = assemble_multi(one_bus)
    with pytest.raises(DimensionMismatchError):
        build_augmented_milp(multi, [[SlackDecision.KEEP_BINARY] * 5])
    with pytest.raises(DimensionMismatchError):
        build_augmented_milp(multi, [])


def test_missing_case_needs_explicit_bigm(pinned):
    from qcqp.qcqp_multi import multi_from_blocks

    with pytest.raises(BigMConfigError):
        build_milp(multi_from_blocks([pinned]))


#####################################
# Solves
#####################################


def test_one_bus_optimum(one_bus):
    multi = assemble_multi(one_bus)
    sol = solve_milp(build_milp(multi))
    assert sol.status == MipStatus.OPTIMAL
    assert sol.objective == pytest.approx(54.0, abs=1e-5)
    assert multi.objective(sol.xs) == pytest.approx(54.0, abs=1e-5)
    assert sol.xs[0][0] == pytest.approx(72.0, abs=1e-5)
    assert is_multi_feasible(multi, sol.xs)
    assert sol.tight == []


def test_two_bus_optimum(two_bus):
    multi = assemble_multi(two_bus)
    sol = solve_milp(build_milp(multi))
    assert sol.status == MipStatus.OPTIMAL
    assert sol.n_binaries == 8
    assert sol.objective == pytest.approx(52.0, abs=1e-5)
    assert is_multi_feasible(multi, sol.xs)


def test_fixed_pattern_is_pure_lp(one_bus):
    multi = assemble_multi(one_bus)
    x = stack_solution(one_bus, dispatch(one_bus, [71.0]), [71.0], multi.blocks[0].layout)
    sol = solve_milp(build_augmented_milp(multi, decisions_from_point(multi, [x])))
    assert sol.n_binaries == 0
    assert sol.objective == pytest.approx(54.0, abs=1e-5)


def test_all_keep_matches_baseline(two_bus):
    multi = assemble_multi(two_bus)
    keep = [[SlackDecision.KEEP_BINARY] * q.n_pairs for q in multi.blocks]
    assert solve_milp(build_augmented_milp(multi, keep)).objective == pytest.approx(52.0, abs=1e-5)


def test_contradictory_pattern_is_infeasible(one_bus):
    multi = assemble_multi(one_bus)
    decisions = [[SlackDecision.KEEP_BINARY] * multi.blocks[0].n_pairs]
    # S1 is generator 1: pin its output to both pmin and pmax
    decisions[0][1] = SlackDecision.FIX_PRIMAL_SLACK
    decisions[0][3] = SlackDecision.FIX_PRIMAL_SLACK
    sol = solve_milp(build_augmented_milp(multi, decisions))
    assert sol.status == MipStatus.INFEASIBLE
    assert not sol.ok


def test_small_dual_bound_is_flagged(one_bus):
    # at the optimum C1 earns 72 - 50 = 22 on its upper bound
    multi = assemble_multi(one_bus)
    cfg = BigMConfig(primal={"generation": 20.0, "demand": 10.0, "flow": 1.0}, dual={"generation": 22.0, "demand": 22.0, "flow": 22.0})
    sol = solve_milp(build_milp(multi, cfg))
    assert sol.objective == pytest.approx(54.0, abs=1e-5)
    assert "b0/gen_upper[0]/dual" in sol.tight


def test_verify_linearization(three_bus):
    sol = dispatch(three_bus, [48.0])
    assert verify_linearization(three_bus, sol, [48.0]) < 1e-6


def test_row_violation():
    A = np.array([[1.0, 1.0]])
    assert row_violation(A, np.array([1.0]), np.array([1.0]), np.array([0.25, 0.25])) == pytest.approx(0.5)


def test_time_limit_from_environment(monkeypatch):
    monkeypatch.setenv("NODAL_MIP_TIME_LIMIT", "12.5")
    assert HighsMipSolver().time_limit == 12.5
    assert HighsMipSolver(time_limit=3.0).time_limit == 3.0


#####################################
# Export
#####################################


def test_pyomo_model_mirrors_columns(two_bus):
    milp = build_milp(assemble_multi(two_bus))
    model = to_pyomo(milp)
    assert len(model.z) == milp.n_variables
    assert sum(1 for j in model.z if model.z[j].is_binary()) == milp.n_binaries
    names = column_names(milp)
    assert len(set(names)) == len(names)
    assert all(" " not in name and "[" not in name for name in names)


def test_export_lp(tmp_path, one_bus):
    milp = build_milp(assemble_multi(one_bus))
    path = export_milp_lp(milp, tmp_path / "milp" / "one_bus.lp")
    assert path.exists()
    assert "profit" in path.read_text()
    legend = path.with_suffix(".columns.txt").read_text().splitlines()
    assert len(legend) == milp.n_variables


#####################################
# Scenario and slot structure
#####################################


def test_identical_scenarios_leave_optimum_unchanged(one_bus):
    from bench.scenarios import with_scenarios

    copies = with_scenarios(one_bus, (1.0, 1.0, 1.0))
    sol = solve_milp(build_milp(assemble_multi(copies)))
    assert sol.status == MipStatus.OPTIMAL
    assert sol.objective == pytest.approx(54.0, abs=1e-5)


def test_slots_without_binding_ramp_are_independent(one_bus, two_bus):
    from bench.scenarios import with_horizon, with_ramp

    for case, single in ((one_bus, 54.0), (two_bus, 52.0)):
        multi = assemble_multi(with_ramp(with_horizon(case, 2), 100.0))
        sol = solve_milp(build_milp(multi))
        assert sol.status == MipStatus.OPTIMAL
        assert sol.objective == pytest.approx(2.0 * single, abs=1e-4)
        # each slot on its own reaches the single-slot optimum
        for t in range(2):
            assert multi.blocks[t].objective(sol.xs[t]) == pytest.approx(single, abs=1e-4)
