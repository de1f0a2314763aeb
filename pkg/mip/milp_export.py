"""
milp_export.py - write a MilpProblem in CPLEX LP format.

The model is rebuilt in pyomo column by column so any LP-reading solver can
cross-check the HiGHS answer. Column and row names follow the QCQP layout.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import pathlib
import re
from typing import Union

# Import external packages
import numpy as np
import pyomo.environ as pyo

# Import functions from local modules
from mip.milp_reform import MilpProblem
from utils.utils_logger import logger


def _clean(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", label)


def to_pyomo(milp: MilpProblem) -> pyo.ConcreteModel:
    """Concrete pyomo model with one variable per MILP column."""
    model = pyo.ConcreteModel(name="bidding_milp")
    columns = range(milp.n_variables)

    def domain(m, j):
        return pyo.Binary if milp.integrality[j] else pyo.Reals

    def bounds(m, j):
        lo, hi = milp.lower[j], milp.upper[j]
        return (None if np.isinf(lo) else float(lo), None if np.isinf(hi) else float(hi))

    model.z = pyo.Var(columns, domain=domain, bounds=bounds)
    model.rows = pyo.ConstraintList()
    A = milp.A.tocsr()
    for i in range(milp.n_rows):
        start, end = A.indptr[i], A.indptr[i + 1]
        if start == end:
            continue
        expr = sum(float(v) * model.z[int(j)] for j, v in zip(A.indices[start:end], A.data[start:end]))
        lo, hi = milp.lb[i], milp.ub[i]
        if lo == hi:
            model.rows.add(expr == float(lo))
            continue
        if not np.isinf(lo):
            model.rows.add(expr >= float(lo))
        if not np.isinf(hi):
            model.rows.add(expr <= float(hi))
    nz = np.flatnonzero(milp.c)
    model.profit = pyo.Objective(expr=sum(float(milp.c[j]) * model.z[int(j)] for j in nz) + milp.constant, sense=pyo.maximize)
    return model


def export_milp_lp(milp: MilpProblem, path: Union[str, pathlib.Path]) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    model = to_pyomo(milp)
    model.write(str(path), format="lp", io_options={"symbolic_solver_labels": True})
    legend = path.with_suffix(".columns.txt")
    legend.write_text("\n".join(f"z[{j}] {name}" for j, name in enumerate(column_names(milp))) + "\n", encoding="utf-8")
    logger.info(f"Exported MILP ({milp.n_variables} columns, {milp.n_binaries} binary, {milp.n_rows} rows) to {path}")
    return path


def column_names(milp: MilpProblem) -> list[str]:
    """Readable name of every column, for matching the exported file against the layout."""
    return [_clean(milp.column_label(j)) for j in range(milp.n_variables)]
