"""Economic dispatch LP: hand-checked desk cases and KKT residuals."""

import numpy as np
import pytest

from bench.scenarios import random_case
from market.dispatch_lp import build_dispatch_lp, dispatch
from market.kkt_check import dual_objective, kkt_residuals, primal_objective, strategic_profit
from utils.utils_errors import DimensionMismatchError, InfeasibleDispatchError


def test_one_bus_strategic_marginal(one_bus):
    sol = dispatch(one_bus, [60.0])
    assert sol.p_g == pytest.approx([3.0, 2.0], abs=1e-7)
    assert sol.p_d == pytest.approx([5.0], abs=1e-7)
    assert sol.lam == pytest.approx([60.0], abs=1e-6)
    assert sol.objective == pytest.approx(-90.0, abs=1e-6)
    assert strategic_profit(one_bus, sol) == pytest.approx(30.0, abs=1e-6)


def test_one_bus_cheap_bid_takes_whole_load(one_bus):
    sol = dispatch(one_bus, [40.0])
    assert sol.p_g == pytest.approx([0.0, 5.0], abs=1e-7)
    assert sol.lam == pytest.approx([40.0], abs=1e-6)
    assert strategic_profit(one_bus, sol) == pytest.approx(-25.0, abs=1e-6)


def test_two_bus_congestion_splits_prices(two_bus):
    sol = dispatch(two_bus, [30.0])
    assert sol.p_g == pytest.approx([1.0, 3.0], abs=1e-7)
    assert sol.p_d == pytest.approx([4.0], abs=1e-7)
    assert sol.lam == pytest.approx([30.0, 72.0], abs=1e-6)
    assert sol.psi.sum() + sol.phi.sum() == pytest.approx(42.0, abs=1e-5)
    assert strategic_profit(two_bus, sol) == pytest.approx(10.0, abs=1e-6)


@pytest.mark.parametrize("bid", [20.0, 45.0, 49.5, 60.0, 71.9])
def test_kkt_residuals_vanish(one_bus, two_bus, three_bus, bid):
    for case in (one_bus, two_bus, three_bus):
        sol = dispatch(case, [bid])
        kkt = kkt_residuals(case, [bid], sol)
        assert kkt.max_residual < 1e-6, kkt.as_dict()


def test_strong_duality(three_bus):
    sol = dispatch(three_bus, [55.0])
    assert primal_objective(three_bus, [55.0], sol) == pytest.approx(dual_objective(three_bus, sol), abs=1e-6)
    assert sol.objective == pytest.approx(primal_objective(three_bus, [55.0], sol), abs=1e-6)


def test_random_cases_satisfy_kkt(rng):
    for i in range(20):
        case = random_case(rng, int(rng.integers(1, 6)), name=f"random_{i}")
        bid = float(rng.uniform(10, 80))
        sol = dispatch(case, [bid])
        assert kkt_residuals(case, [bid], sol).max_residual < 1e-6


def test_infeasible_dispatch(two_bus):
    import dataclasses

    from market.market_model import Load, LoadSet

    stuck = dataclasses.replace(
        two_bus,
        loads=LoadSet((Load(name="D2", bus=2, p_min=5.0, p_max=5.0, bids=(72.0,)),)),
        generators=dataclasses.replace(two_bus.generators, generators=tuple(
            dataclasses.replace(g, p_max=1.0) for g in two_bus.generators.generators
        )),
    )
    with pytest.raises(InfeasibleDispatchError):
        dispatch(stuck, [30.0])


def test_bid_count_checked(ieee30):
    with pytest.raises(DimensionMismatchError):
        build_dispatch_lp(ieee30, [50.0])


def test_negative_bid_rejected(one_bus):
    with pytest.raises(ValueError):
        build_dispatch_lp(one_bus, [-1.0])


def test_ieee30_dispatch_is_kkt_point(ieee30):
    bids = np.array(ieee30.generators.strategic_costs)
    sol = dispatch(ieee30, bids)
    assert kkt_residuals(ieee30, bids, sol).max_residual < 1e-6
    assert abs(sol.theta[0]) < 1e-9


@pytest.mark.parametrize("name, bid", [("one_bus", 60.0), ("two_bus", 30.0)])
def test_dispatch_is_homogeneous_in_bids(request, name, bid):
    from bench.scenarios import with_scenarios

    # scenario 1 doubles every non-strategic and load bid; doubling the strategic bid too scales all prices
    case = with_scenarios(request.getfixturevalue(name), (1.0, 2.0))
    base = dispatch(case, [bid], k=0)
    doubled = dispatch(case, [2.0 * bid], k=1)
    expected = base.scaled_duals(2.0)
    assert np.allclose(doubled.p_g, base.p_g, atol=1e-7)
    assert np.allclose(doubled.p_d, base.p_d, atol=1e-7)
    for dual in ("lam", "sigma", "delta", "zeta", "xi", "phi", "psi"):
        assert np.allclose(getattr(doubled, dual), getattr(expected, dual), atol=1e-6), dual
    assert doubled.objective == pytest.approx(expected.objective, abs=1e-6)
