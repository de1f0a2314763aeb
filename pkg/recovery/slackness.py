"""
slackness.py - decide which complementarity branch a relaxed point favours.

At the lifted candidate x = O y* + xbar every pair has a slack factor and a
dual factor. With thresholds eps < delta:

    |slack| <= eps   and |dual| >= delta   ->  fix-primal-slack
    |slack| >= delta and |dual| <= eps     ->  fix-dual-factor
    anything else                          ->  keep-binary

Slacks are multiplied by slack_scale first so that p.u. quantities are
compared in MW.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

# Import external packages
import numpy as np

# Import functions from local modules
from mip.milp_reform import SlackDecision
from qcqp.qcqp_reduce import ReducedForm
from utils.utils_errors import DimensionMismatchError
from utils.utils_logger import logger


@dataclass(frozen=True)
class PairClassification:
    block: int
    pair: int
    name: str
    slack: float
    dual: float
    decision: SlackDecision


@dataclass
class SlacknessClassification:
    eps: float
    delta: float
    slack_scale: float
    n_blocks: int
    pairs: list[PairClassification] = field(default_factory=list)

    def decisions(self) -> list[list[SlackDecision]]:
        """Per-block decision lists, in pair order; the input of build_augmented_milp."""
        out: list[list[SlackDecision]] = [[] for _ in range(self.n_blocks)]
        for p in self.pairs:
            out[p.block].append(p.decision)
        return out

    def counts(self) -> dict[str, int]:
        tally = Counter(p.decision.value for p in self.pairs)
        return {d.value: tally.get(d.value, 0) for d in SlackDecision}

    def kept(self) -> set[tuple[int, int]]:
        return {(p.block, p.pair) for p in self.pairs if p.decision == SlackDecision.KEEP_BINARY}


def decide(slack: float, dual: float, eps: float, delta: float) -> SlackDecision:
    slack, dual = abs(slack), abs(dual)
    if slack <= eps and dual >= delta:
        return SlackDecision.FIX_PRIMAL_SLACK
    if slack >= delta and dual <= eps:
        return SlackDecision.FIX_DUAL_FACTOR
    return SlackDecision.KEEP_BINARY


def classify(
    reduced: Sequence[ReducedForm],
    ys: Sequence[np.ndarray],
    eps: float,
    delta: float,
    slack_scale: float = 1.0,
) -> SlacknessClassification:
    """Classify every pair of every block at x = O y + xbar."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not delta > eps:
        raise ValueError(f"delta must exceed eps, got delta={delta}, eps={eps}")
    if len(reduced) != len(ys):
        raise DimensionMismatchError(f"{len(ys)} candidates for {len(reduced)} blocks")

    result = SlacknessClassification(eps=eps, delta=delta, slack_scale=slack_scale, n_blocks=len(reduced))
    for b, (red, y) in enumerate(zip(reduced, ys)):
        x = red.lift(y)
        for z, pair in enumerate(red.parent.pairs):
            slack = slack_scale * pair.slack(x)
            dual = pair.multiplier(x)
            result.pairs.append(
                PairClassification(block=b, pair=z, name=pair.name, slack=slack, dual=dual, decision=decide(slack, dual, eps, delta))
            )
    logger.debug(f"Classification at eps={eps}, delta={delta}: {result.counts()}")
    return result
