"""
utils_errors.py - exception types shared by every package.

Library code raises these; only the command-line entry points catch them,
log the message and exit with a nonzero code.
"""

from typing import Optional


class NodalBiddingError(Exception):
    """Base class for all errors raised by this project."""


#####################################
# Case ingestion
#####################################


class CaseParseError(NodalBiddingError):
    """The case text could not be parsed.

    Carries the line/column reported by the JSON decoder when the text is
    malformed, or the dotted field path when a field is missing or mistyped.
    """

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None,
    ):
        self.line = line
        self.column = column
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if field is not None:
            where.append(f"field '{field}'")
        location = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{location}")


class CaseValidationError(NodalBiddingError):
    """The case parsed but violates a model invariant."""


class ScenarioFactorError(NodalBiddingError):
    """A scenario scaling factor is not strictly positive."""


class NetworkExtensionError(NodalBiddingError):
    """A network cannot be extended to the requested size."""


#####################################
# Solvers
#####################################


class InfeasibleDispatchError(NodalBiddingError):
    """The economic dispatch LP has no feasible point."""


class SolverFailureError(NodalBiddingError):
    """A solver stopped without a usable answer."""


class InconsistentEqualitiesError(NodalBiddingError):
    """The linear equality system of a QCQP has no solution."""


class DimensionMismatchError(NodalBiddingError):
    """A vector has the wrong length for the form it is used with."""


class DegenerateMomentError(NodalBiddingError):
    """A moment matrix has a leading entry too far from one."""


class BigMConfigError(NodalBiddingError):
    """A big-M bound is not strictly positive and finite."""


class RecoveryExhaustedError(NodalBiddingError):
    """Neither the augmented MILPs nor the baseline MILP returned a point."""


#####################################
# Reporting
#####################################


class UndefinedRatioError(NodalBiddingError):
    """Optimality ratio requested against a nonpositive reference."""


class OracleBudgetError(NodalBiddingError):
    """The brute-force grid is empty or larger than the configured budget."""
