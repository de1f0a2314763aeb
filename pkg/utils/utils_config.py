"""
utils_config.py - settings read from the environment (.env).

Each getter reads one variable with os.getenv, falls back to a default and
logs the resolved value. Command-line flags override what these return.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import os
import pathlib
from typing import Optional

# Import external packages
from dotenv import load_dotenv

# Import functions from local modules
from utils.utils_logger import logger

#####################################
# Load Environment Variables
#####################################

load_dotenv()

#####################################
# Default Configurations
#####################################

DEFAULT_TOLERANCE = 1e-6
DEFAULT_SVD_CUTOFF = 1e-9
DEFAULT_RANK_TOL = 1e-6
DEFAULT_SDP_SOLVER = "CLARABEL"
DEFAULT_SDP_FALLBACK = "SCS"
DEFAULT_MIP_TIME_LIMIT = 600.0
DEFAULT_MIP_GAP = 1e-6
DEFAULT_EPS0 = 0.1
DEFAULT_DELTA = 1.0
DEFAULT_EPS_STEP = 0.01
DEFAULT_SLACK_SCALE = 100.0
DEFAULT_BIGM_SCALE = 1.0
DEFAULT_ORACLE_BUDGET = 200_000
DEFAULT_WORKERS = 1

PROJECT_ROOT = pathlib.Path(__file__).parent.parent
DATA_FOLDER = PROJECT_ROOT.joinpath("data")


#####################################
# Helpers
#####################################


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"{name}='{raw}' is not a number; using {default}")
        return default


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"{name}='{raw}' is not an integer; using {default}")
        return default


#####################################
# Getter Functions for .env Variables
#####################################


def get_tolerance() -> float:
    """Feasibility/complementarity tolerance used throughout."""
    tol = _float_env("NODAL_TOLERANCE", DEFAULT_TOLERANCE)
    logger.debug(f"Tolerance: {tol}")
    return tol


def get_svd_cutoff() -> float:
    """Relative singular-value cutoff for null-space reduction."""
    cutoff = _float_env("NODAL_SVD_CUTOFF", DEFAULT_SVD_CUTOFF)
    logger.debug(f"SVD cutoff: {cutoff}")
    return cutoff


def get_rank_tol() -> float:
    """Relative singular-value cutoff for numeric rank of moment matrices."""
    tol = _float_env("NODAL_RANK_TOL", DEFAULT_RANK_TOL)
    logger.debug(f"Rank tolerance: {tol}")
    return tol


def get_sdp_solver() -> str:
    """Name of the cvxpy solver used for semidefinite programs."""
    solver = os.getenv("NODAL_SDP_SOLVER", DEFAULT_SDP_SOLVER).upper()
    logger.debug(f"SDP solver: {solver}")
    return solver


def get_sdp_fallback() -> str:
    """Solver tried when the primary SDP solver raises."""
    solver = os.getenv("NODAL_SDP_FALLBACK", DEFAULT_SDP_FALLBACK).upper()
    logger.debug(f"SDP fallback solver: {solver}")
    return solver


def get_mip_time_limit() -> float:
    """Wall-clock limit per MILP solve, in seconds."""
    limit = _float_env("NODAL_MIP_TIME_LIMIT", DEFAULT_MIP_TIME_LIMIT)
    logger.debug(f"MIP time limit: {limit} s")
    return limit


def get_mip_gap() -> float:
    """Relative MIP gap target."""
    gap = _float_env("NODAL_MIP_GAP", DEFAULT_MIP_GAP)
    logger.debug(f"MIP gap target: {gap}")
    return gap


def get_eps0() -> float:
    """Initial epsilon of the recovery algorithm."""
    return _float_env("NODAL_EPS0", DEFAULT_EPS0)


def get_delta() -> float:
    """Delta threshold of the recovery algorithm."""
    return _float_env("NODAL_DELTA", DEFAULT_DELTA)


def get_eps_step() -> float:
    """Amount epsilon is decreased after an infeasible augmented MILP."""
    return _float_env("NODAL_EPS_STEP", DEFAULT_EPS_STEP)


def get_slack_scale() -> float:
    """Multiplier turning p.u. slacks into MW before they are classified."""
    scale = _float_env("NODAL_SLACK_SCALE", DEFAULT_SLACK_SCALE)
    logger.debug(f"Slack scale: {scale}")
    return scale


def get_bigm_scale() -> float:
    """Multiplier applied to every default big-M bound."""
    scale = _float_env("NODAL_BIGM_SCALE", DEFAULT_BIGM_SCALE)
    logger.debug(f"Big-M scale: {scale}")
    return scale


def get_bid_cap() -> Optional[float]:
    """Absolute upper bound on strategic bids, or None for the case default."""
    raw = os.getenv("NODAL_BID_CAP")
    if raw is None or raw.strip() == "":
        return None
    cap = _float_env("NODAL_BID_CAP", 0.0)
    logger.info(f"Strategic bid cap from environment: {cap}")
    return cap


def get_oracle_budget() -> int:
    """Maximum number of bid combinations the brute-force oracle may try."""
    budget = _int_env("NODAL_ORACLE_BUDGET", DEFAULT_ORACLE_BUDGET)
    logger.debug(f"Oracle budget: {budget}")
    return budget


def get_workers() -> int:
    """Parallel workers for bench sweeps."""
    workers = max(1, _int_env("NODAL_WORKERS", DEFAULT_WORKERS))
    logger.debug(f"Workers: {workers}")
    return workers


def get_output_folder() -> pathlib.Path:
    """Folder where bench reports are written."""
    folder = pathlib.Path(os.getenv("NODAL_OUTPUT_FOLDER", str(DATA_FOLDER.joinpath("results"))))
    logger.debug(f"Output folder: {folder}")
    return folder


def get_case_folder() -> pathlib.Path:
    """Folder holding the built-in case files."""
    folder = pathlib.Path(os.getenv("NODAL_CASE_FOLDER", str(DATA_FOLDER)))
    logger.debug(f"Case folder: {folder}")
    return folder
