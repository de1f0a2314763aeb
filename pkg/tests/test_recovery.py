"""Slackness classification and the recovery loop."""

import json

import numpy as np
import pytest

from market.dispatch_lp import dispatch
from mip.milp_reform import SlackDecision, solve_milp, build_milp
from mip.mip_contract import HighsMipSolver, MipResult, MipStatus
from qcqp.qcqp_builder import stack_solution
from qcqp.qcqp_multi import assemble_multi, multi_from_blocks
from recovery.algorithm_one import RecoveryConfig, algorithm1, recover_case
from recovery.slackness import classify, decide
from relax.moment_tools import MomentSolution
from relax.sdp_multi import solve_multi_sdp
from utils.utils_errors import DimensionMismatchError, RecoveryExhaustedError, SolverFailureError

#####################################
# Classification
#####################################


@pytest.mark.parametrize(
    "slack, dual, expected",
    [
        (0.0, 5.0, SlackDecision.FIX_PRIMAL_SLACK),
        (0.05, 1.0, SlackDecision.FIX_PRIMAL_SLACK),
        (3.0, 0.0, SlackDecision.FIX_DUAL_FACTOR),
        (-3.0, 0.01, SlackDecision.FIX_DUAL_FACTOR),
        (0.5, 0.5, SlackDecision.KEEP_BINARY),
        (0.0, 0.0, SlackDecision.KEEP_BINARY),
        (2.0, 2.0, SlackDecision.KEEP_BINARY),
    ],
)
def test_decide(slack, dual, expected):
    assert decide(slack, dual, eps=0.1, delta=1.0) == expected


def _dispatch_candidate(case, bid):
    multi = assemble_multi(case)
    x = stack_solution(case, dispatch(case, [bid]), [bid], multi.blocks[0].layout)
    return multi, x


def test_classify_dispatch_point(one_bus):
    multi, x = _dispatch_candidate(one_bus, 60.0)
    y = multi.reduced[0].project(x)
    result = classify(multi.reduced, [y], eps=0.1, delta=1.0, slack_scale=100.0)
    decisions = dict((p.name, p.decision) for p in result.pairs)
    # C1 is at pmax with a 10 $/MWh dual, S1 is marginal and D1 is fully served
    assert decisions["gen_upper[0]"] == SlackDecision.FIX_PRIMAL_SLACK
    assert decisions["gen_lower[0]"] == SlackDecision.FIX_DUAL_FACTOR
    assert decisions["gen_lower[1]"] == SlackDecision.FIX_DUAL_FACTOR
    assert decisions["gen_upper[1]"] == SlackDecision.FIX_DUAL_FACTOR
    assert decisions["load_upper[0]"] == SlackDecision.FIX_PRIMAL_SLACK
    assert sum(result.counts().values()) == 6
    assert result.kept() == set()
    assert result.decisions() == [[p.decision for p in result.pairs]]


def test_classify_arguments(one_bus):
    multi, x = _dispatch_candidate(one_bus, 60.0)
    y = multi.reduced[0].project(x)
    with pytest.raises(ValueError):
        classify(multi.reduced, [y], eps=0.0, delta=1.0)
    with pytest.raises(ValueError):
        classify(multi.reduced, [y], eps=1.0, delta=0.5)
    with pytest.raises(DimensionMismatchError):
        classify(multi.reduced, [y, y], eps=0.1, delta=1.0)


#####################################
# Configuration and report
#####################################


def test_config_from_env(monkeypatch):
    monkeypatch.setenv("NODAL_EPS0", "0.2")
    monkeypatch.setenv("NODAL_DELTA", "2")
    config = RecoveryConfig.from_env(delta=None, eps_step=0.05)
    assert config.eps0 == 0.2
    assert config.delta == 2.0
    assert config.eps_step == 0.05


#####################################
# Algorithm
#####################################


def _moment(ys):
    return MomentSolution(blocks=[], ys=list(ys), status="optimal", objective=None)


def test_feasible_candidate_exits_early(one_bus, tmp_path):
    multi, x = _dispatch_candidate(one_bus, 60.0)
    report = algorithm1(multi, _moment([multi.reduced[0].project(x)]))
    assert report.early_exit and not report.fallback
    assert report.n_iterations == 0
    assert report.profit == pytest.approx(30.0, abs=1e-6)
    assert report.bids == [[pytest.approx(60.0)]]
    text = report.to_json(tmp_path / "report.json")
    data = json.loads((tmp_path / "report.json").read_text())
    assert data == json.loads(text)
    assert data["early_exit"] is True and len(data["xs"]) == 1


def test_infeasible_candidate_goes_through_milp(one_bus):
    multi, x = _dispatch_candidate(one_bus, 60.0)
    y = multi.reduced[0].project(x)
    shifted = y + 0.05 * np.ones_like(y)
    report = algorithm1(multi, _moment([shifted]), RecoveryConfig())
    assert not report.early_exit
    assert report.n_iterations >= 1
    assert report.feasible
    assert report.profit <= 54.0 + 1e-6
    assert report.milp_objective == pytest.approx(report.profit, abs=1e-5)
    first = report.iterations[0]
    assert first.eps == pytest.approx(0.1)
    assert sum(first.counts.values()) == 6


def test_empty_or_mismatched_moment(one_bus):
    multi = assemble_multi(one_bus)
    with pytest.raises(SolverFailureError):
        algorithm1(multi, MomentSolution(blocks=[], ys=[], status="infeasible", objective=None))
    with pytest.raises(DimensionMismatchError):
        algorithm1(multi, _moment([np.zeros(multi.reduced[0].r)] * 2))


class _RefusingSolver:
    """Reports every problem with fixed pairs as infeasible; solves the rest with HiGHS."""

    def __init__(self, refuse_all: bool = False):
        self.inner = HighsMipSolver()
        self.refuse_all = refuse_all
        self.calls = 0

    def submit(self, c, A, lb, ub, lower, upper, integrality):
        self.calls += 1
        if self.refuse_all or self.calls == 1:
            return MipResult(status=MipStatus.INFEASIBLE, x=None, objective=None, bound=None, gap=None)
        return self.inner.submit(c, A, lb, ub, lower, upper, integrality)


def test_exhausted_epsilon_falls_back_to_baseline(one_bus):
    multi, x = _dispatch_candidate(one_bus, 60.0)
    y = multi.reduced[0].project(x) + 0.05
    config = RecoveryConfig(eps0=0.01, eps_step=0.01)
    report = algorithm1(multi, _moment([y]), config, solver=_RefusingSolver())
    assert report.fallback
    assert report.iterations[-1].eps == 0.0
    assert report.profit == pytest.approx(54.0, abs=1e-5)


def test_nothing_feasible_raises(one_bus):
    multi, x = _dispatch_candidate(one_bus, 60.0)
    y = multi.reduced[0].project(x) + 0.05
    with pytest.raises(RecoveryExhaustedError):
        algorithm1(multi, _moment([y]), RecoveryConfig(eps0=0.02), solver=_RefusingSolver(refuse_all=True))


@pytest.mark.slow
def test_pinned_relaxation_is_exact(pinned):
    multi = multi_from_blocks([pinned])
    report = algorithm1(multi, solve_multi_sdp(multi))
    assert report.early_exit
    assert report.profit == pytest.approx(0.25, abs=1e-5)
    assert report.case == "qcqp"


@pytest.mark.slow
@pytest.mark.parametrize("name, optimum", [("one_bus", 54.0), ("two_bus", 52.0)])
def test_recover_desk_cases(request, name, optimum):
    case = request.getfixturevalue(name)
    report, moment = recover_case(case)
    assert report.feasible
    assert report.profit <= optimum + 1e-5
    assert report.extra["sdp_bound"] >= report.profit - 1e-4
    assert len(report.extra["ranks"]) == 1
    baseline = solve_milp(build_milp(assemble_multi(case)))
    assert baseline.objective == pytest.approx(optimum, abs=1e-5)


@pytest.mark.slow
def test_recover_ieee30_single_slot(ieee30):
    report, moment = recover_case(ieee30)
    assert moment.ys and len(moment.ys) == 1
    assert report.feasible
    assert np.all(np.asarray(report.bids) >= -1e-6)
    if moment.status == "optimal":
        assert moment.objective >= report.profit - 1e-4 * max(1.0, abs(report.profit))
