"""
qcqp_dump.py - write QCQP data to a matrix archive for cross-tool checks.

dump_qcqp(qcqp, reduced, path) writes `<path>.npz` with the arrays below and
`<path>.json` describing each one (shape and meaning), so the data can be
loaded with numpy.load or any npz reader.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import json
import pathlib
from typing import Optional, Union

# Import external packages
import numpy as np

# Import functions from local modules
from qcqp.qcqp_builder import QcqpForm
from qcqp.qcqp_reduce import ReducedForm
from utils.utils_logger import logger

ARRAY_DESCRIPTIONS: dict[str, str] = {
    "F": "symmetric objective matrix, objective x^T F x + 2 f^T x",
    "f": "linear objective vector",
    "P": "inequality rows p_i (p_i^T x + p_i0 >= 0)",
    "p0": "inequality constants p_i0",
    "V": "equality rows v_m (v_m^T x + v_m0 = 0)",
    "v0": "equality constants v_m0",
    "U": "slack factor rows u_z of the complementarity pairs",
    "u0": "slack factor constants",
    "W": "multiplier factor rows w_z",
    "w0": "multiplier factor constants",
    "Q": "outer-product matrices Q_z = u_z w_z^T, stacked along axis 0",
    "q": "vectors q_z = (u0 w + w0 u) / 2, one row per pair",
    "d": "vectors d_z = 2 u_z / u0 with Q_z = d_z q_z^T; NaN rows where u0 = 0",
    "O": "orthonormal null-space basis of V",
    "xbar": "minimum-norm solution of V x = -v0",
    "C_reduced": "objective in homogeneous reduced coordinates",
}


def dump_qcqp(qcqp: QcqpForm, reduced: Optional[ReducedForm], path: Union[str, pathlib.Path]) -> tuple[pathlib.Path, pathlib.Path]:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = qcqp.n
    pairs = qcqp.pairs
    arrays = {
        "F": qcqp.F,
        "f": qcqp.f,
        "P": qcqp.P,
        "p0": qcqp.p0,
        "V": qcqp.V,
        "v0": qcqp.v0,
        "U": np.vstack([p.u for p in pairs]) if pairs else np.zeros((0, n)),
        "u0": np.array([p.u0 for p in pairs]),
        "W": np.vstack([p.w for p in pairs]) if pairs else np.zeros((0, n)),
        "w0": np.array([p.w0 for p in pairs]),
        "Q": np.stack([p.Q for p in pairs]) if pairs else np.zeros((0, n, n)),
        "q": np.vstack([p.q for p in pairs]) if pairs else np.zeros((0, n)),
        "d": np.vstack([p.d if p.d is not None else np.full(n, np.nan) for p in pairs]) if pairs else np.zeros((0, n)),
    }
    if reduced is not None:
        arrays.update({"O": reduced.O, "xbar": reduced.xbar, "C_reduced": reduced.C})

    archive = path.with_suffix(".npz")
    np.savez_compressed(archive, **arrays)

    manifest = {
        "n": n,
        "r": reduced.r if reduced is not None else None,
        "slot": qcqp.t,
        "scenario": qcqp.k,
        "inequality_labels": list(qcqp.inequality_labels),
        "equality_labels": list(qcqp.equality_labels),
        "pair_labels": [p.name for p in pairs],
        "arrays": {
            name: {"shape": list(np.shape(value)), "description": ARRAY_DESCRIPTIONS[name]}
            for name, value in arrays.items()
        },
    }
    manifest_path = path.with_suffix(".json")
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    logger.info(f"Wrote QCQP archive {archive} and manifest {manifest_path}")
    return archive, manifest_path
