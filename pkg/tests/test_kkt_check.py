"""KKT residual evaluation, profit and the optimality ratio."""

import dataclasses

import numpy as np
import pytest

from market.dispatch_lp import dispatch
from market.kkt_check import compute_optimality, kkt_residuals, strategic_profit
from utils.utils_errors import DimensionMismatchError, UndefinedRatioError


def test_perturbed_duals_show_up(three_bus):
    sol = dispatch(three_bus, [50.0])
    broken = dataclasses.replace(sol, lam=sol.lam + 1.0)
    kkt = kkt_residuals(three_bus, [50.0], broken)
    assert kkt.gen_stationarity == pytest.approx(1.0, abs=1e-6)
    assert kkt.max_residual >= 1.0


def test_complementarity_reported_per_family(two_bus):
    sol = dispatch(two_bus, [30.0])
    residuals = kkt_residuals(two_bus, [30.0], sol).as_dict()
    for family in ("gen_lower", "gen_upper", "load_lower", "load_upper", "flow_lower", "flow_upper"):
        assert residuals[f"complementarity_{family}"] < 1e-6
    assert residuals["max"] < 1e-6


def test_dimension_mismatch(one_bus, two_bus):
    sol = dispatch(two_bus, [30.0])
    with pytest.raises(DimensionMismatchError):
        kkt_residuals(one_bus, [30.0], sol)
    with pytest.raises(DimensionMismatchError):
        strategic_profit(two_bus, sol, strategic_bids=[1.0, 2.0])


def test_profit_uses_local_price(two_bus):
    sol = dispatch(two_bus, [30.0])
    # S1 sits at bus 1 where the price is its own bid, not the 72 at bus 2
    assert strategic_profit(two_bus, sol) == pytest.approx(1.0 * (30.0 - 20.0), abs=1e-6)


def test_optimality_ratio():
    assert compute_optimality(48.0, 50.0) == pytest.approx(0.96)
    assert compute_optimality(50.0, 50.0) == 1.0
    with pytest.raises(UndefinedRatioError):
        compute_optimality(1.0, 0.0)
    with pytest.raises(UndefinedRatioError):
        compute_optimality(1.0, -3.0)


def test_residuals_of_zero_vector_are_large(one_bus):
    sol = dispatch(one_bus, [60.0])
    zero = dataclasses.replace(sol, p_d=np.zeros(1))
    assert kkt_residuals(one_bus, [60.0], zero).balance == pytest.approx(5.0, abs=1e-6)


def test_profit_ignores_order_of_rival_generators(ieee30):
    from market.market_model import GeneratorFleet

    generators = list(ieee30.generators.generators)
    rivals = [i for i, g in enumerate(generators) if not g.is_strategic]
    shuffled = list(generators)
    for i, j in zip(rivals, reversed(rivals)):
        shuffled[i] = generators[j]
    permuted = dataclasses.replace(ieee30, generators=GeneratorFleet(tuple(shuffled)))
    assert [g.name for g in permuted.generators.generators] != [g.name for g in generators]

    bids = ieee30.generators.strategic_costs + 5.0
    original = strategic_profit(ieee30, dispatch(ieee30, bids), bids)
    reordered = strategic_profit(permuted, dispatch(permuted, bids), bids)
    assert reordered == pytest.approx(original, abs=1e-6)
