"""
bench_cli.py - command-line entry point.

    python -m bench.bench_cli dispatch --case toy_one_bus --bids 60
    python -m bench.bench_cli relax    --case ieee30 --T 1 --K 1
    python -m bench.bench_cli recover  --case toy_three_bus --eps0 0.1 --delta 1
    python -m bench.bench_cli milp     --case toy_two_bus --export data/results/toy.lp
    python -m bench.bench_cli oracle   --case toy_one_bus
    python -m bench.bench_cli bench    --case ieee30 --T 4 --sweep scenarios --values 1 2 3
    python -m bench.bench_cli bench    --suite acceptance

Flags override the NODAL_* environment settings. Results are printed as
JSON and, with --out, written to a file. Exit code 0 on success, 1 on a
modelling or solver error, 130 when interrupted.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import argparse
import json
import pathlib
import sys
from typing import Optional, Sequence

# Import external packages
import numpy as np

# Import functions from local modules
from bench.acceptance import run_acceptance
from bench.experiment import METHODS, SWEEPS, ExperimentSpec, emit_report, run_experiment
from bench.oracle import brute_force_oracle
from bench.scenarios import scenario_factors, with_horizon, with_scenarios
from market.case_loader import resolve_case
from market.dispatch_lp import dispatch
from market.kkt_check import kkt_residuals, strategic_profit
from market.market_model import MarketCase
from mip.milp_export import export_milp_lp
from mip.milp_reform import BigMConfig, build_milp, solve_milp
from mip.mip_contract import HighsMipSolver
from qcqp.layout import format_census, variable_census
from qcqp.qcqp_dump import dump_qcqp
from qcqp.qcqp_multi import assemble_multi
from recovery.algorithm_one import RecoveryConfig, recover_case
from relax.conic_contract import export_conic
from relax.moment_tools import rank_profile
from relax.sdp_multi import build_multi_sdp, solve_multi_sdp
from utils.utils_config import get_output_folder
from utils.utils_errors import NodalBiddingError
from utils.utils_logger import logger

#####################################
# Helpers
#####################################


def _case(args: argparse.Namespace) -> MarketCase:
    case = resolve_case(args.case)
    if getattr(args, "K", None):
        case = with_scenarios(case, scenario_factors(args.K))
    if getattr(args, "T", None) or getattr(args, "start_hour", None):
        case = with_horizon(case, args.T or case.horizon, getattr(args, "start_hour", None))
    logger.info(f"Case '{case.name}': {case.network.n_buses} buses, T={case.horizon}, K={case.n_scenarios}")
    return case


def _emit(result: dict, out: Optional[str]) -> None:
    text = json.dumps(result, indent=2, default=float)
    print(text)
    if out:
        path = pathlib.Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Result written to {path}")


def _bigm(case: MarketCase, args: argparse.Namespace) -> BigMConfig:
    return BigMConfig.default_for(case, args.bigm_scale)


#####################################
# Subcommands
#####################################


def cmd_dispatch(args: argparse.Namespace) -> int:
    case = _case(args)
    bids = np.array(args.bids, dtype=float) if args.bids else np.array(case.generators.strategic_costs)
    sol = dispatch(case, bids, args.t, args.k)
    kkt = kkt_residuals(case, bids, sol)
    _emit(
        {
            "case": case.name,
            "bids": bids.tolist(),
            "objective": sol.objective,
            "lmp": dict(zip(case.network.node_ids, sol.lam.tolist())),
            "p_g": {g.name: float(v) for g, v in zip(case.generators.generators, sol.p_g)},
            "p_d": {d.name: float(v) for d, v in zip(case.loads.loads, sol.p_d)},
            "profit": strategic_profit(case, sol),
            "kkt_max_residual": kkt.max_residual,
        },
        args.out,
    )
    return 0


def cmd_relax(args: argparse.Namespace) -> int:
    case = _case(args)
    multi = assemble_multi(case)
    first = multi.blocks[0]
    logger.info(f"Variable census:\n{format_census(variable_census(first.layout))}")
    if args.dump:
        dump_qcqp(first, multi.reduced[0], args.dump)
    if args.export:
        export_conic(build_multi_sdp(multi), args.export)
    moment = solve_multi_sdp(multi)
    _emit(
        {
            "case": case.name,
            "n": first.n,
            "r": multi.reduced[0].r,
            "blocks": multi.n_blocks,
            "matrix_scalars": moment.matrix_scalars,
            "status": moment.status,
            "bound": moment.objective,
            "ranks": moment.ranks,
            "rank_profile": [rank_profile(Y) for Y in moment.blocks],
            "solver": moment.solver,
            "time_s": moment.solve_time,
        },
        args.out,
    )
    return 0


def cmd_recover(args: argparse.Namespace) -> int:
    case = _case(args)
    config = RecoveryConfig.from_env(eps0=args.eps0, delta=args.delta)
    report, _ = recover_case(case, config, mip_solver=HighsMipSolver(time_limit=args.time_limit), bigm=_bigm(case, args))
    result = report.to_dict()
    result.pop("xs")
    _emit(result, args.out)
    return 0 if report.feasible else 1


def cmd_milp(args: argparse.Namespace) -> int:
    case = _case(args)
    milp = build_milp(assemble_multi(case), _bigm(case, args))
    if args.export:
        export_milp_lp(milp, args.export)
    sol = solve_milp(milp, HighsMipSolver(time_limit=args.time_limit))
    _emit(
        {
            "case": case.name,
            "status": sol.status.value,
            "profit": sol.objective,
            "bound": sol.bound,
            "gap": sol.gap,
            "binaries": sol.n_binaries,
            "time_s": sol.solve_time,
            "bigM_touching": sol.tight,
        },
        args.out,
    )
    return 0 if sol.ok else 1


def cmd_oracle(args: argparse.Namespace) -> int:
    case = _case(args)
    result = brute_force_oracle(case, step=args.step)
    _emit(
        {
            "case": case.name,
            "profit": result.profit,
            "bids": result.bids.tolist(),
            "evaluated": result.evaluated,
            "skipped": result.skipped,
            "tolerance": result.tolerance,
            "time_s": result.solve_time,
        },
        args.out,
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    if args.suite == "acceptance":
        document = run_acceptance(args.out, heavy=args.heavy)
        print(json.dumps({"passed": document["passed"], "criteria": {c["id"]: c["passed"] for c in document["criteria"]}}))
        return 0 if document["passed"] else 1
    spec = ExperimentSpec(
        case=args.case,
        T=args.T or 1,
        K=args.K or 1,
        sweep=args.sweep,
        values=tuple(args.values),
        methods=tuple(args.methods),
        time_limit=args.time_limit,
        start_hours=tuple(args.start_hours),
        bigm_scale=args.bigm_scale,
        eps0=args.eps0,
        delta=args.delta,
        workers=args.workers,
    )
    table = run_experiment(spec)
    out = args.out or str(get_output_folder().joinpath(f"{args.case}_{args.sweep}.{args.format}"))
    emit_report(table, out, args.format)
    print(table.to_string(index=False))
    return 0


#####################################
# Argument parser
#####################################


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench_cli", description="Strategic bidding in nodal markets: dispatch, relax, recover, benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--case", default="toy_one_bus", help="built-in case name or path to a case JSON file")
        p.add_argument("--T", type=int, default=None, help="number of hourly slots")
        p.add_argument("--K", type=int, default=None, help="number of price scenarios")
        p.add_argument("--start-hour", dest="start_hour", type=int, default=None, help="first clock hour of the horizon")
        p.add_argument("--out", default=None, help="write the result to this file")

    def solver_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--bigm-scale", dest="bigm_scale", type=float, default=None)
        p.add_argument("--time-limit", dest="time_limit", type=float, default=None, help="seconds per MILP solve")

    p = sub.add_parser("dispatch", help="solve the ISO dispatch LP for given strategic bids")
    common(p)
    p.add_argument("--bids", type=float, nargs="*", default=None, help="one bid per strategic unit (default: costs)")
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--k", type=int, default=0)
    p.set_defaults(func=cmd_dispatch)

    p = sub.add_parser("relax", help="solve the moment relaxation and print the bound and ranks")
    common(p)
    p.add_argument("--export", default=None, help="write the conic problem as text")
    p.add_argument("--dump", default=None, help="write the first block's QCQP matrices (.npz)")
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("recover", help="relax, then recover feasible bids")
    common(p)
    solver_flags(p)
    p.add_argument("--eps0", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("milp", help="solve the baseline big-M MILP")
    common(p)
    solver_flags(p)
    p.add_argument("--export", default=None, help="write the MILP in CPLEX LP format")
    p.set_defaults(func=cmd_milp)

    p = sub.add_parser("oracle", help="brute-force the bid grid")
    common(p)
    p.add_argument("--step", type=float, default=0.01, help="bid grid step in $/MWh")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run a sweep or the acceptance suite")
    common(p)
    solver_flags(p)
    p.add_argument("--sweep", choices=SWEEPS, default="scenarios")
    p.add_argument("--values", type=float, nargs="+", default=[1])
    p.add_argument("--methods", nargs="+", choices=METHODS, default=["sdp+recovery", "baseline-milp"])
    p.add_argument("--start-hours", dest="start_hours", type=int, nargs="+", default=[1], help="horizon windows to average over")
    p.add_argument("--eps0", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--suite", choices=("acceptance",), default=None)
    p.add_argument("--heavy", action="store_true", help="include the 30-bus multi-scenario benchmark in the suite")
    p.set_defaults(func=cmd_bench)
    return parser


#####################################
# Define main function
#####################################


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger.info(f"START {args.command}")
    try:
        return args.func(args)
    except NodalBiddingError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except KeyboardInterrupt:
        logger.warning(f"{args.command} interrupted by user.")
        return 130
    finally:
        logger.info(f"END {args.command}")


#####################################
# Conditional Execution
#####################################

if __name__ == "__main__":
    sys.exit(main())
