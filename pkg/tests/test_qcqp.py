"""QCQP assembly, null-space reduction, multi-block coupling and dumps."""

import json

import numpy as np
import pytest

from bench.scenarios import with_horizon, with_scenarios
from market.dispatch_lp import dispatch
from market.kkt_check import strategic_profit
from qcqp.layout import SEGMENTS, VariableLayout, format_census, variable_census
from qcqp.qcqp_builder import assemble_qcqp, stack_solution
from qcqp.qcqp_dump import dump_qcqp
from qcqp.qcqp_multi import assemble_multi, check_multi_feasibility, coupling_residuals, is_multi_feasible
from qcqp.qcqp_reduce import lift, reduce
from utils.utils_errors import DimensionMismatchError, InconsistentEqualitiesError

#####################################
# Layout
#####################################


def test_layout_one_bus(one_bus):
    layout = VariableLayout.for_case(one_bus)
    assert layout.n == 12
    assert [name for name, _ in layout.sizes] == list(SEGMENTS)
    assert layout.selector("bid", 1) == 0
    assert layout.index("pg", 1) == 2
    with pytest.raises(KeyError):
        layout.selector("bid", 0)
    with pytest.raises(IndexError):
        layout.index("lam", 1)


def test_layout_locate_inverts_index(three_bus):
    layout = VariableLayout.for_case(three_bus)
    for position in range(layout.n):
        name, element = layout.locate(position)
        assert layout.index(name, element) == position
    assert layout.label(layout.index("theta", 2)) == "theta[2]"


def test_census_ieee30(ieee30):
    census = variable_census(VariableLayout.for_case(ieee30))
    assert census["total"] == 150
    assert census["bid"] == 4 and census["phi"] == 1 and census["theta"] == 30
    assert "total" in format_census(census)


#####################################
# Builder
#####################################


def test_one_bus_dimensions(one_bus):
    q = assemble_qcqp(one_bus)
    assert q.n == 12
    assert q.n_pairs == 6
    assert q.n_inequalities == 14
    assert q.n_equalities == 6
    assert np.allclose(q.F, q.F.T)


@pytest.mark.parametrize("bid", [47.0, 60.0, 71.0])
def test_dispatch_point_is_feasible(one_bus, bid):
    q = assemble_qcqp(one_bus)
    sol = dispatch(one_bus, [bid])
    x = stack_solution(one_bus, sol, [bid], q.layout)
    assert q.max_residual(x) < 1e-6
    profit = strategic_profit(one_bus, sol)
    assert q.objective(x) == pytest.approx(profit, abs=1e-6)
    assert q.linear_objective_value(x) == pytest.approx(profit, abs=1e-6)


def test_linearization_holds_with_congestion(two_bus, three_bus):
    for case, bid in ((two_bus, 30.0), (three_bus, 45.0), (three_bus, 65.0)):
        q = assemble_qcqp(case)
        sol = dispatch(case, [bid])
        x = stack_solution(case, sol, [bid], q.layout)
        assert q.max_residual(x) < 1e-6
        assert q.linear_objective_value(x) == pytest.approx(q.objective(x), abs=1e-6)


def test_pair_quadratic_matches_product(three_bus, rng):
    q = assemble_qcqp(three_bus)
    x = rng.normal(size=q.n)
    for pair in q.pairs:
        assert pair.quadratic(x) == pytest.approx(pair.product(x), rel=1e-9, abs=1e-9)
        if pair.d is not None:
            assert np.allclose(pair.Q, np.outer(pair.d, pair.q))


def test_bid_above_cap_is_infeasible(one_bus):
    q = assemble_qcqp(one_bus)
    sol = dispatch(one_bus, [60.0])
    x = stack_solution(one_bus, sol, [80.0], q.layout)
    assert q.residuals(x)["inequality"] == pytest.approx(8.0)


def test_vector_length_checked(one_bus):
    q = assemble_qcqp(one_bus)
    with pytest.raises(DimensionMismatchError):
        q.objective(np.zeros(5))


#####################################
# Reduction
#####################################


def test_pinned_reduction(pinned):
    red = reduce(pinned)
    assert red.r == 1
    assert red.order == 2
    x = red.lift(red.project(np.array([0.5, 0.5])))
    assert x == pytest.approx([0.5, 0.5])
    assert red.objective(red.project(x)) == pytest.approx(0.25)


def test_reduction_preserves_objective(three_bus):
    q = assemble_qcqp(three_bus)
    red = reduce(q)
    sol = dispatch(three_bus, [45.0])
    x = stack_solution(three_bus, sol, [45.0], q.layout)
    y = red.project(x)
    assert np.allclose(red.lift(y), x, atol=1e-6)
    assert red.objective(y) == pytest.approx(q.objective(x), abs=1e-5)
    assert np.allclose(q.V @ red.O, 0.0, atol=1e-9)
    assert np.allclose(red.O.T @ red.O, np.eye(red.r), atol=1e-9)


def test_reduced_rows_match_parent(two_bus, rng):
    q = assemble_qcqp(two_bus)
    red = reduce(q)
    y = rng.normal(size=red.r)
    x = lift(red, y)
    z = np.concatenate([[1.0], y])
    assert np.allclose(red.G @ z, q.inequality_values(x))
    assert np.allclose((red.Gu @ z) * (red.Gw @ z), q.complementarity_values(x))


def test_ieee30_reduced_size(ieee30):
    red = reduce(assemble_qcqp(ieee30))
    assert red.n == 150
    assert red.r == 62


def test_inconsistent_equalities(pinned):
    import dataclasses

    bad = dataclasses.replace(pinned, V=np.array([[1.0, 1.0], [1.0, 1.0]]), v0=np.array([-1.0, -2.0]))
    with pytest.raises(InconsistentEqualitiesError):
        reduce(bad)


def test_lift_checks_length(pinned):
    with pytest.raises(DimensionMismatchError):
        lift(reduce(pinned), np.zeros(3))


#####################################
# Multi-block
#####################################


@pytest.fixture
def multi_case(three_bus):
    return with_horizon(with_scenarios(three_bus, (1.1, 1.0, 0.9)), 2)


def test_multi_structure(multi_case):
    multi = assemble_multi(multi_case)
    assert multi.n_blocks == 6
    assert multi.block_index(1, 2) == 5
    assert multi.slot_scenario(4) == (1, 1)
    assert len(multi.ramps) == 6
    assert len(multi.bids) == 4
    assert multi.weights == pytest.approx([1 / 3] * 6)


def test_multi_dispatch_point_feasible(multi_case):
    multi = assemble_multi(multi_case)
    bid = [50.0]
    xs = []
    for b, q in enumerate(multi.blocks):
        t, k = multi.slot_scenario(b)
        xs.append(stack_solution(multi_case, dispatch(multi_case, bid, t, k), bid, q.layout))
    report = check_multi_feasibility(multi, xs)
    assert report["max"] < 1e-6
    assert is_multi_feasible(multi, xs)


def test_multi_detects_bid_and_ramp_breaks(multi_case):
    multi = assemble_multi(multi_case)
    q = multi.blocks[0]
    xs = [np.zeros(q.n) for _ in range(multi.n_blocks)]
    xs[1][q.layout.index("bid", 0)] = 2.0
    xs[3][q.layout.index("pg", 0)] = 0.5
    residuals = coupling_residuals(multi, xs)
    assert residuals["bid"] == pytest.approx(2.0)
    assert residuals["ramp"] == pytest.approx(0.2)
    with pytest.raises(DimensionMismatchError):
        check_multi_feasibility(multi, xs[:2])


#####################################
# Dump
#####################################


def test_dump_writes_archive_and_manifest(tmp_path, two_bus):
    q = assemble_qcqp(two_bus)
    archive, manifest = dump_qcqp(q, reduce(q), tmp_path / "dump" / "two_bus")
    data = np.load(archive)
    assert data["F"].shape == (q.n, q.n)
    assert data["Q"].shape == (q.n_pairs, q.n, q.n)
    meta = json.loads(manifest.read_text(encoding="utf-8"))
    assert meta["n"] == q.n
    assert meta["r"] == reduce(q).r
    assert len(meta["pair_labels"]) == q.n_pairs
    assert "description" in meta["arrays"]["O"]
